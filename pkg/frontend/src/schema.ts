// Exact CSV schemas produced by the simulator's campaign runner. Columns are
// validated positionally: a file is either bit-compatible or rejected with
// the offending column named.

import { readFileSync } from "fs";
import Papa from "papaparse";

export const SUMMARY_COLUMNS = [
  "run_id", "policy", "epsilon", "seed", "client", "p", "q", "xbar_star",
  "xbar_emp", "sigma_i_emp", "sigma_tot_emp", "mean_rolling_loc",
  "eq2_residual", "eq7_slack",
] as const;

export const PER_INTERVAL_COLUMNS = [
  "run_id", "policy", "seed", "t", "total_loc", "rolling_loc",
  "deficit_spread",
] as const;

export class SchemaError extends Error {}

export interface SummaryRow {
  runId: string;
  policy: string;
  epsilon: string; // kept verbatim so report labels match the CSV exactly
  seed: number;
  client: number; // 0 marks an error row for a refused run
  p: number;
  q: number;
  xbarStar: number;
  xbarEmp: number;
  sigmaIEmp: number;
  sigmaTotEmp: number;
  meanRollingLoc: number;
  eq2Residual: number;
  eq7Slack: number;
}

export interface IntervalRow {
  runId: string;
  policy: string;
  seed: number;
  t: number;
  totalLoc: number;
  rollingLoc: number;
  deficitSpread: number | null; // empty for policies without target deficits
}

function splitCsv(text: string): string[][] {
  const parsed = Papa.parse<string[]>(text, { skipEmptyLines: true });
  // an empty file trips delimiter auto-detection; the header check below
  // reports that case as the missing schema it is
  const errors = parsed.errors.filter(e => e.code !== "UndetectableDelimiter");
  if (errors.length > 0) {
    const e = errors[0];
    throw new SchemaError(`CSV parse error at row ${e.row}: ${e.message}`);
  }
  return parsed.data;
}

function checkHeader(header: string[] | undefined, required: readonly string[]): void {
  const got = header ?? [];
  for (const col of required) {
    if (!got.includes(col)) throw new SchemaError(`missing column: ${col}`);
  }
  for (const col of got) {
    if (!required.includes(col)) throw new SchemaError(`unexpected column: ${col}`);
  }
  required.forEach((col, i) => {
    if (got[i] !== col) {
      throw new SchemaError(`column ${i + 1} must be ${col}, got ${got[i]}`);
    }
  });
}

function num(value: string, column: string, line: number): number {
  const x = Number(value);
  if (value.trim() === "" || !Number.isFinite(x)) {
    throw new SchemaError(`line ${line}: bad number for ${column}: ${JSON.stringify(value)}`);
  }
  return x;
}

export function parseSummary(text: string): SummaryRow[] {
  const records = splitCsv(text);
  checkHeader(records[0], SUMMARY_COLUMNS);
  if (records.length < 2) throw new SchemaError("no data rows");
  const rows: SummaryRow[] = [];
  for (let r = 1; r < records.length; r++) {
    const rec = records[r];
    const line = r + 1;
    if (rec.length !== SUMMARY_COLUMNS.length) {
      throw new SchemaError(`line ${line}: expected ${SUMMARY_COLUMNS.length} fields, got ${rec.length}`);
    }
    const client = num(rec[4], "client", line);
    if (client === 0) {
      // refused run: identity fields only, metrics are blank by contract
      rows.push({
        runId: rec[0], policy: rec[1], epsilon: rec[2],
        seed: num(rec[3], "seed", line), client: 0,
        p: NaN, q: NaN, xbarStar: NaN, xbarEmp: NaN, sigmaIEmp: NaN,
        sigmaTotEmp: NaN, meanRollingLoc: NaN, eq2Residual: NaN, eq7Slack: NaN,
      });
      continue;
    }
    rows.push({
      runId: rec[0],
      policy: rec[1],
      epsilon: rec[2],
      seed: num(rec[3], "seed", line),
      client,
      p: num(rec[5], "p", line),
      q: num(rec[6], "q", line),
      xbarStar: num(rec[7], "xbar_star", line),
      xbarEmp: num(rec[8], "xbar_emp", line),
      sigmaIEmp: num(rec[9], "sigma_i_emp", line),
      sigmaTotEmp: num(rec[10], "sigma_tot_emp", line),
      meanRollingLoc: num(rec[11], "mean_rolling_loc", line),
      eq2Residual: num(rec[12], "eq2_residual", line),
      eq7Slack: num(rec[13], "eq7_slack", line),
    });
  }
  return rows;
}

export function parsePerInterval(text: string): IntervalRow[] {
  const records = splitCsv(text);
  checkHeader(records[0], PER_INTERVAL_COLUMNS);
  if (records.length < 2) throw new SchemaError("no data rows");
  const rows: IntervalRow[] = [];
  for (let r = 1; r < records.length; r++) {
    const rec = records[r];
    const line = r + 1;
    if (rec.length !== PER_INTERVAL_COLUMNS.length) {
      throw new SchemaError(`line ${line}: expected ${PER_INTERVAL_COLUMNS.length} fields, got ${rec.length}`);
    }
    rows.push({
      runId: rec[0],
      policy: rec[1],
      seed: num(rec[2], "seed", line),
      t: num(rec[3], "t", line),
      totalLoc: num(rec[4], "total_loc", line),
      rollingLoc: num(rec[5], "rolling_loc", line),
      deficitSpread: rec[6].trim() === "" ? null : num(rec[6], "deficit_spread", line),
    });
  }
  return rows;
}

export function readSummary(path: string): SummaryRow[] {
  return parseSummary(readFileSync(path, "utf-8"));
}

export function readPerInterval(path: string): IntervalRow[] {
  return parsePerInterval(readFileSync(path, "utf-8"));
}
