export {
  PER_INTERVAL_COLUMNS,
  SUMMARY_COLUMNS,
  SchemaError,
  parsePerInterval,
  parseSummary,
  readPerInterval,
  readSummary,
} from "./schema.js";
export type { IntervalRow, SummaryRow } from "./schema.js";
export {
  CV_TOL,
  POLICY_COLORS,
  POLICY_ORDER,
  XBAR_TOL,
  groupReports,
  mean,
  seedMeanSeries,
  std,
} from "./stats.js";
export type { ClientCheck, GroupReport, PolicyBand } from "./stats.js";
export { renderLocTimeseries } from "./plotLoc.js";
export type { FigureSpec } from "./plotLoc.js";
export { renderConstraintReport } from "./report.js";
