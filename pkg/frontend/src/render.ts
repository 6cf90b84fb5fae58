/**
 * Render scaling figures from `letlift bench` CSV output.
 *
 * Usage:
 *   render --csv out.csv [--csv more.csv] --family underlets_plus0 \
 *          --x n|m|nm [--logx] [--logy] --out fig.svg
 *
 * One series per engine; cells whose status is not "ok" are skipped with a
 * warning.  Output is a deterministic SVG.
 */

import { writeFileSync } from "fs";
import { parseArgs } from "node:util";
import { BenchRow, parseCsv, xValue } from "./csv";
import { renderSvg, Series } from "./svgplot";

export interface PlotSpec {
  csvPaths: string[];
  family: string;
  x: string; // n | m | nm
  logX: boolean;
  logY: boolean;
  out: string;
}

function xAxisLabel(spec: PlotSpec): string {
  if (spec.x === "nm") return "m*n (= # of let binders = # of recursive calls)";
  if (spec.family === "underlets_plus0") return "# of let binders";
  return spec.x;
}

export function buildSeries(spec: PlotSpec, warn: (msg: string) => void): Series[] {
  const rows: BenchRow[] = spec.csvPaths.flatMap(parseCsv);
  const selected = rows.filter((r) => r.family === spec.family);
  if (selected.length === 0) {
    throw new Error(`no rows for family ${JSON.stringify(spec.family)}`);
  }
  const byEngine = new Map<string, BenchRow[]>();
  for (const r of selected) {
    if (r.status !== "ok" || r.wall_time_s === null) {
      warn(`skipping failed cell: ${r.engine} n=${r.n} m=${r.m} (${r.status})`);
      continue;
    }
    const bucket = byEngine.get(r.engine) ?? [];
    bucket.push(r);
    byEngine.set(r.engine, bucket);
  }
  const series: Series[] = [];
  for (const [engine, bucket] of byEngine) {
    const points = bucket
      .map((r): [number, number] => [xValue(r, spec.x), r.wall_time_s as number])
      .sort((a, b) => a[0] - b[0]);
    series.push({ label: engine, points });
  }
  return series;
}

export function render(spec: PlotSpec, warn: (msg: string) => void = console.warn): string {
  const series = buildSeries(spec, warn);
  const svg = renderSvg(series, {
    title: spec.family,
    xLabel: xAxisLabel(spec),
    yLabel: "time (s)",
    logX: spec.logX,
    logY: spec.logY,
  });
  writeFileSync(spec.out, svg);
  return svg;
}

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        csv: { type: "string", multiple: true },
        family: { type: "string" },
        x: { type: "string", default: "n" },
        logx: { type: "boolean", default: false },
        logy: { type: "boolean", default: false },
        out: { type: "string", default: "plot.svg" },
      },
    });
  } catch (err) {
    console.error(String(err));
    return 2;
  }
  const v = parsed.values;
  if (!v.csv || v.csv.length === 0 || !v.family) {
    console.error("usage: render --csv <file>... --family <name> [--x n|m|nm]" +
      " [--logx] [--logy] [--out fig.svg]");
    return 2;
  }
  const spec: PlotSpec = {
    csvPaths: v.csv,
    family: v.family,
    x: v.x as string,
    logX: Boolean(v.logx),
    logY: Boolean(v.logy),
    out: v.out as string,
  };
  try {
    render(spec);
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
  console.error(`wrote ${spec.out}`);
  return 0;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
