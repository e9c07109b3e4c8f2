// Fig.-style LoC comparison: one seed-averaged rolling-LoC curve per policy
// with a shaded across-seed min/max band. Rendered headlessly to SVG via the
// echarts SSR mode; styling (policy order, colors) is fixed so reruns are
// diff-stable.

import * as echarts from "echarts";
import { POLICY_COLORS, seedMeanSeries } from "./stats.js";
import type { IntervalRow } from "./schema.js";
import { SchemaError } from "./schema.js";

const MAX_POINTS = 2000;
const FALLBACK_COLOR = "#7f7f7f";

export interface FigureSpec {
  input: string; // per_interval.csv path
  scenario: string; // label only; the data defines the curves
  output: string; // image path (.svg)
}

interface Aligned {
  policy: string;
  mean: (number | null)[];
  min: (number | null)[];
  range: (number | null)[]; // max - min, stacked on top of min for the band
}

// zrender numbers its generated ids/class names with a process-global
// counter, so two renders of the same data differ cosmetically; renumber by
// first appearance to keep the output byte-stable
function normalizeSvgIds(svg: string): string {
  const seen = new Map<string, string>();
  return svg.replace(/zr\d+-[\w-]+/g, token => {
    let mapped = seen.get(token);
    if (mapped === undefined) {
      mapped = `zr-${seen.size}`;
      seen.set(token, mapped);
    }
    return mapped;
  });
}

export function renderLocTimeseries(rows: IntervalRow[], scenario: string): string {
  const bands = seedMeanSeries(rows);
  if (bands.length === 0) throw new SchemaError("no data rows");

  // one shared category grid so the stacked band series line up
  let grid = [...new Set(bands.flatMap(b => b.t))].sort((a, b) => a - b);
  if (grid.length > MAX_POINTS) {
    const stride = Math.ceil(grid.length / MAX_POINTS);
    const last = grid[grid.length - 1];
    grid = grid.filter((_, i) => i % stride === 0);
    if (grid[grid.length - 1] !== last) grid.push(last);
  }

  const aligned: Aligned[] = bands.map(band => {
    const at = new Map<number, number>();
    band.t.forEach((t, i) => at.set(t, i));
    const pick = (xs: number[]) =>
      grid.map(t => (at.has(t) ? xs[at.get(t)!] : null));
    const mn = pick(band.min);
    const mx = pick(band.max);
    return {
      policy: band.policy,
      mean: pick(band.mean),
      min: mn,
      range: mn.map((v, i) => (v === null || mx[i] === null ? null : mx[i]! - v)),
    };
  });

  const series: object[] = [];
  for (const band of aligned) {
    const color = POLICY_COLORS[band.policy] ?? FALLBACK_COLOR;
    const stack = `band-${band.policy}`;
    series.push({
      name: `${band.policy}-min`,
      type: "line",
      stack,
      data: band.min,
      lineStyle: { opacity: 0 },
      symbol: "none",
      silent: true,
      tooltip: { show: false },
    });
    series.push({
      name: `${band.policy}-range`,
      type: "line",
      stack,
      data: band.range,
      lineStyle: { opacity: 0 },
      areaStyle: { color, opacity: 0.18 },
      symbol: "none",
      silent: true,
      tooltip: { show: false },
    });
    series.push({
      name: band.policy,
      type: "line",
      data: band.mean,
      symbol: "none",
      lineStyle: { width: 2, color },
      itemStyle: { color },
    });
  }

  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width: 960,
    height: 540,
  });
  chart.setOption({
    animation: false,
    title: {
      text: scenario ? `Rolling LoC — ${scenario}` : "Rolling LoC",
      left: "center",
    },
    legend: { data: aligned.map(b => b.policy), top: 28 },
    grid: { left: 70, right: 30, top: 64, bottom: 48 },
    xAxis: {
      type: "category",
      name: "interval t",
      boundaryGap: false,
      data: grid.map(String),
    },
    yAxis: { type: "value", name: "rolling LoC" },
    series,
  });
  const svg = chart.renderToSVGString();
  chart.dispose();
  return normalizeSvgIds(svg);
}
