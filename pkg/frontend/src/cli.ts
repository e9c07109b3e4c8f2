#!/usr/bin/env node
// analysis-plots CLI: offline figures and reports from campaign CSVs.
//
//   plot-loc --in per_interval.csv --out fig.svg [--scenario NAME]
//   report   --in summary.csv      --out report.md

import { writeFileSync } from "fs";
import { parseArgs } from "util";

import { SchemaError, readPerInterval, readSummary } from "./schema.js";
import { renderLocTimeseries } from "./plotLoc.js";
import { renderConstraintReport } from "./report.js";

const USAGE = `usage:
  cli.js plot-loc --in per_interval.csv --out fig.svg [--scenario NAME]
  cli.js report   --in summary.csv      --out report.md`;

function fail(message: string, code: number): never {
  console.error(message);
  process.exit(code);
}

export function main(argv: string[]): void {
  const command = argv[0];
  if (command !== "plot-loc" && command !== "report") {
    fail(USAGE, 2);
  }
  let values;
  try {
    ({ values } = parseArgs({
      args: argv.slice(1),
      options: {
        in: { type: "string" },
        out: { type: "string" },
        scenario: { type: "string", default: "" },
      },
    }));
  } catch (err) {
    fail(`${(err as Error).message}\n${USAGE}`, 2);
  }
  if (!values.in || !values.out) {
    fail(`--in and --out are required\n${USAGE}`, 2);
  }

  try {
    if (command === "plot-loc") {
      const rows = readPerInterval(values.in);
      writeFileSync(values.out, renderLocTimeseries(rows, values.scenario ?? ""));
    } else {
      const rows = readSummary(values.in);
      writeFileSync(values.out, renderConstraintReport(rows));
    }
  } catch (err) {
    if (err instanceof SchemaError) {
      fail(`schema error: ${err.message}`, 1);
    }
    throw err;
  }
  console.log(`wrote ${values.out}`);
}

main(process.argv.slice(2));
