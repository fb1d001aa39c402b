/** Small deterministic SVG helpers: fixed precision, no timestamps. */

export function fmt(x: number): string {
  if (!Number.isFinite(x)) throw new Error(`non-finite coordinate ${x}`);
  const s = x.toPrecision(6);
  return s.includes(".") ? s.replace(/\.?0+$/, "") : s;
}

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export interface Scale {
  (value: number): number;
  ticks: number[];
}

/** log10 scale mapping [lo, hi] (in data space) onto [a, b] pixels. */
export function logScale(lo: number, hi: number, a: number, b: number): Scale {
  if (!(lo > 0) || !(hi > 0)) throw new Error("log scale needs positive data");
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  const span = lhi - llo || 1;
  const f = (v: number) => a + ((Math.log10(v) - llo) / span) * (b - a);
  const ticks: number[] = [];
  for (let d = Math.ceil(llo); d <= Math.floor(lhi); d++) {
    ticks.push(Math.pow(10, d));
  }
  if (ticks.length === 0) ticks.push(lo, hi);
  return Object.assign(f, { ticks });
}

export function polyline(
  pts: Array<[number, number]>,
  stroke: string,
  opts: { dash?: string; width?: number; cls?: string } = {},
): string {
  const points = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  const dash = opts.dash ? ` stroke-dasharray="${opts.dash}"` : "";
  const cls = opts.cls ? ` class="${opts.cls}"` : "";
  const w = opts.width ?? 1.5;
  return `<polyline${cls} fill="none" stroke="${stroke}" stroke-width="${w}"${dash} points="${points}"/>`;
}

export function text(
  x: number,
  y: number,
  content: string,
  opts: { size?: number; anchor?: string; fill?: string; cls?: string } = {},
): string {
  const size = opts.size ?? 11;
  const anchor = opts.anchor ? ` text-anchor="${opts.anchor}"` : "";
  const fill = opts.fill ?? "#222";
  const cls = opts.cls ? ` class="${opts.cls}"` : "";
  return `<text${cls} x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" font-family="sans-serif" fill="${fill}"${anchor}>${esc(content)}</text>`;
}

export function line(x1: number, y1: number, x2: number, y2: number, stroke = "#999"): string {
  return `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${stroke}" stroke-width="0.75"/>`;
}

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#17becf",
  "#8c564b",
  "#e377c2",
];

/** Least-squares slope of log(y) against log(x). */
export function loglogSlope(xs: number[], ys: number[]): number {
  const lx = xs.map(Math.log);
  const ly = ys.map(Math.log);
  const n = lx.length;
  const mx = lx.reduce((a, b) => a + b, 0) / n;
  const my = ly.reduce((a, b) => a + b, 0) / n;
  let num = 0;
  let den = 0;
  for (let i = 0; i < n; i++) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) ** 2;
  }
  return den === 0 ? NaN : num / den;
}
