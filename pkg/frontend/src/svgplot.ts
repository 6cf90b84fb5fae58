/** Minimal deterministic SVG line/scatter plots with optional log axes. */

export interface Series {
  label: string;
  points: Array<[number, number]>; // sorted by x
}

export interface PlotOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  logX: boolean;
  logY: boolean;
  width?: number;
  height?: number;
}

const PALETTE = ["#2166ac", "#1a9850", "#d73027", "#7b3294", "#e08214", "#35978f"];

const M = { left: 70, right: 20, top: 36, bottom: 52 };

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e5 || a < 1e-3) return v.toExponential(0).replace("+", "");
  return Number(v.toPrecision(4)).toString();
}

function niceTicks(lo: number, hi: number, count = 5): number[] {
  if (lo === hi) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = span / (count * step);
  const mult = err >= 7.5 ? 10 : err >= 3 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-12 * span; v += s) ticks.push(v);
  return ticks;
}

function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.floor(Math.log10(lo)); Math.pow(10, e) <= hi * (1 + 1e-9); e++) {
    const v = Math.pow(10, e);
    if (v >= lo * (1 - 1e-9)) ticks.push(v);
  }
  return ticks.length >= 2 ? ticks : [lo, hi];
}

class Scale {
  constructor(
    private lo: number,
    private hi: number,
    private out0: number,
    private out1: number,
    private log: boolean
  ) {
    if (log && lo <= 0) throw new Error("log axis needs positive values");
  }

  at(v: number): number {
    const [a, b] = this.log
      ? [Math.log(this.lo), Math.log(this.hi)]
      : [this.lo, this.hi];
    const t = ((this.log ? Math.log(v) : v) - a) / (b - a || 1);
    return this.out0 + t * (this.out1 - this.out0);
  }

  ticks(): number[] {
    return this.log ? logTicks(this.lo, this.hi) : niceTicks(this.lo, this.hi);
  }
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderSvg(series: Series[], opt: PlotOptions): string {
  const width = opt.width ?? 640;
  const height = opt.height ?? 420;
  const xs = series.flatMap((s) => s.points.map((p) => p[0]));
  const ys = series.flatMap((s) => s.points.map((p) => p[1]));
  if (xs.length === 0) throw new Error("nothing to plot: no data points");
  const pad = (lo: number, hi: number, log: boolean): [number, number] =>
    log ? [lo / 1.25, hi * 1.25] : lo === hi ? [lo - 1, hi + 1] : [lo, hi + (hi - lo) * 0.05];
  const [xLo, xHi] = pad(Math.min(...xs), Math.max(...xs), opt.logX);
  const [yLo, yHi] = pad(Math.min(...ys), Math.max(...ys), opt.logY);
  const sx = new Scale(xLo, xHi, M.left, width - M.right, opt.logX);
  const sy = new Scale(yLo, yHi, height - M.bottom, M.top, opt.logY);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="12">`
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(`<text x="${width / 2}" y="20" text-anchor="middle" font-size="14">` +
    `${esc(opt.title)}</text>`);

  // axes
  const x0 = M.left, x1 = width - M.right, y0 = height - M.bottom, y1 = M.top;
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black"/>`);
  for (const t of sx.ticks()) {
    const px = sx.at(t);
    parts.push(`<line x1="${px.toFixed(2)}" y1="${y0}" x2="${px.toFixed(2)}" y2="${y0 + 5}" stroke="black"/>`);
    parts.push(
      `<text x="${px.toFixed(2)}" y="${y0 + 18}" text-anchor="middle" class="x-tick">${fmt(t)}</text>`
    );
  }
  for (const t of sy.ticks()) {
    const py = sy.at(t);
    parts.push(`<line x1="${x0 - 5}" y1="${py.toFixed(2)}" x2="${x0}" y2="${py.toFixed(2)}" stroke="black"/>`);
    parts.push(
      `<text x="${x0 - 8}" y="${(py + 4).toFixed(2)}" text-anchor="end" class="y-tick">${fmt(t)}</text>`
    );
  }
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${height - 12}" text-anchor="middle" class="x-label">` +
      `${esc(opt.xLabel)}</text>`
  );
  parts.push(
    `<text x="16" y="${(y0 + y1) / 2}" text-anchor="middle" class="y-label" ` +
      `transform="rotate(-90 16 ${(y0 + y1) / 2})">${esc(opt.yLabel)}</text>`
  );

  // series
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const coords = s.points.map(([x, y]) => `${sx.at(x).toFixed(2)},${sy.at(y).toFixed(2)}`);
    parts.push(
      `<polyline class="series-line" fill="none" stroke="${color}" stroke-width="1.5" ` +
        `points="${coords.join(" ")}"/>`
    );
    for (const c of coords) {
      const [px, py] = c.split(",");
      parts.push(`<circle class="series-point" cx="${px}" cy="${py}" r="3" fill="${color}"/>`);
    }
    const ly = M.top + 14 + i * 16;
    parts.push(`<line x1="${x1 - 130}" y1="${ly - 4}" x2="${x1 - 110}" y2="${ly - 4}" stroke="${color}" stroke-width="2"/>`);
    parts.push(`<text x="${x1 - 104}" y="${ly}" class="legend">${esc(s.label)}</text>`);
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
