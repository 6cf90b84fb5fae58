import { readFileSync } from "fs";

/** One row of the bench CSV schema emitted by `letlift bench`. */
export interface BenchRow {
  family: string;
  engine: string;
  n: number;
  m: number;
  wall_time_s: number | null;
  rule_apps: number | null;
  nodes_visited: number | null;
  lets_lifted: number | null;
  trace_steps: number | null;
  trace_goal_size: number | null;
  output_lets: number | null;
  status: string;
}

export const NUMERIC_COLUMNS = [
  "n",
  "m",
  "wall_time_s",
  "rule_apps",
  "nodes_visited",
  "lets_lifted",
  "trace_steps",
  "trace_goal_size",
  "output_lets",
] as const;

function toNumber(s: string): number | null {
  if (s === "" || s === undefined) return null;
  const v = Number(s);
  if (Number.isNaN(v)) throw new Error(`not a number: ${JSON.stringify(s)}`);
  return v;
}

/** Parse one CSV file; the schema has no quoted fields. */
export function parseCsv(path: string): BenchRow[] {
  const text = readFileSync(path, "utf8");
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) throw new Error(`empty CSV file: ${path}`);
  const header = lines[0].split(",");
  const rows: BenchRow[] = [];
  for (const line of lines.slice(1)) {
    const cells = line.split(",");
    const rec: Record<string, string> = {};
    header.forEach((h, i) => (rec[h] = cells[i] ?? ""));
    for (const col of ["family", "engine", "n", "m", "wall_time_s", "status"]) {
      if (!(col in rec)) throw new Error(`missing column ${col} in ${path}`);
    }
    rows.push({
      family: rec.family,
      engine: rec.engine,
      n: toNumber(rec.n) ?? 0,
      m: toNumber(rec.m) ?? 0,
      wall_time_s: toNumber(rec.wall_time_s),
      rule_apps: toNumber(rec.rule_apps),
      nodes_visited: toNumber(rec.nodes_visited),
      lets_lifted: toNumber(rec.lets_lifted),
      trace_steps: toNumber(rec.trace_steps),
      trace_goal_size: toNumber(rec.trace_goal_size),
      output_lets: toNumber(rec.output_lets),
      status: rec.status,
    });
  }
  return rows;
}

export function xValue(row: BenchRow, x: string): number {
  switch (x) {
    case "n":
      return row.n;
    case "m":
      return row.m;
    case "nm":
      return row.n * row.m;
    default:
      throw new Error(`unknown x column ${JSON.stringify(x)}; use n, m or nm`);
  }
}
