// Markdown constraint report: per-client tracking of the throughput targets,
// dispersion of sigma_i/p_i, work-conservation residuals and variance slack,
// each flagged against the acceptance tolerances. Pure function of the rows.

import type { SummaryRow } from "./schema.js";
import type { GroupReport } from "./stats.js";
import { CV_TOL, XBAR_TOL, groupReports } from "./stats.js";

function fmt(x: number): string {
  if (!Number.isFinite(x)) return "n/a";
  if (x === 0) return "0";
  const a = Math.abs(x);
  return a >= 1e-3 && a < 1e6 ? x.toFixed(6) : x.toExponential(4);
}

function flag(pass: boolean): string {
  return pass ? "PASS" : "FAIL";
}

function groupSection(g: GroupReport): string[] {
  const lines: string[] = [];
  lines.push(`## ${g.policy} eps=${g.epsilon} (${g.seeds} seeds)`);
  lines.push("");
  lines.push("| client | p | q | xbar_star | xbar_emp | abs diff | flag | sigma_i | sigma_i/p |");
  lines.push("|---|---|---|---|---|---|---|---|---|");
  for (const c of g.clients) {
    lines.push(
      `| ${c.client} | ${c.p} | ${c.q} | ${fmt(c.xbarStar)} | ` +
      `${fmt(c.xbarEmpMean)} | ${fmt(c.xbarDiff)} | ${flag(c.xbarPass)} | ` +
      `${fmt(c.sigmaMean)} | ${fmt(c.sigmaRatio)} |`);
  }
  lines.push("");
  const tag = `[${g.policy} eps=${g.epsilon}]`;
  lines.push(`- ${tag} xbar max |diff| = ${fmt(g.xbarMaxDiff)} -> ${flag(g.xbarPass)} (tol ${XBAR_TOL})`);
  lines.push(`- ${tag} sigma/p CV = ${fmt(g.sigmaRatioCv)} -> ${flag(g.cvPass)} (tol ${CV_TOL})`);
  lines.push(`- ${tag} max |eq2 residual| = ${fmt(g.eq2MaxAbs)}; min eq7 slack = ${fmt(g.eq7Min)} -> ${flag(g.eq7Pass)}`);
  if (g.refusedSeeds > 0) {
    lines.push(`- ${tag} refused runs: ${g.refusedSeeds} seeds -> FAIL`);
  }
  lines.push("");
  return lines;
}

export function renderConstraintReport(rows: SummaryRow[]): string {
  const groups = groupReports(rows);
  const lines: string[] = [];
  lines.push("# Constraint report");
  lines.push("");
  lines.push(
    `Tolerances: seed-mean |xbar_emp - xbar_star| <= ${XBAR_TOL} per client; ` +
    `across-client CV of sigma_i/p_i <= ${CV_TOL}. eq2 is the ` +
    "work-conservation residual (mean normalized work minus capacity); eq7 " +
    "is the variance-decomposition slack, nonnegative for the true moments " +
    "(the batch-means estimator can dip below zero for schedules with " +
    "strongly anticorrelated deliveries, so a failed slack check flags " +
    "estimator disagreement, not a broken run).");
  lines.push("");
  for (const g of groups) {
    lines.push(...groupSection(g));
  }
  return lines.join("\n");
}
