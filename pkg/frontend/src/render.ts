/**
 * Figure rendering for bernlab result tables.
 *
 * Two figure kinds: deviation_loglog (deviation vs sample size on log-log
 * axes, empirical series dashed, theory overlay solid, one group per level)
 * and estimator_compare (one panel per distribution, one series group per
 * coordinate count, grand-average solid vs per-coordinate empirical mean
 * dashed). Rendering is a pure function of the CSV bytes and the spec: no
 * timestamps, fixed precision, so re-renders are byte-identical.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { mid, parseResultCsv, ResultRow, ResultTable } from "./csv.js";
import { fmt, line, loglogSlope, logScale, PALETTE, polyline, text } from "./svg.js";

export type FigureKind = "deviation_loglog" | "estimator_compare";

export interface PlotSpec {
  input: string;
  kind: FigureKind;
  output: string;
  /** Columns keying the top-level series/panels; defaults per kind
   * (deviation: profile; compare: the distribution parsed from profile). */
  groupBy?: string[];
}

const GROUPABLE = new Set([
  "experiment",
  "profile",
  "n",
  "estimator",
  "seed",
  "reps",
  "delta",
]);

function groupKeyFn(groupBy: string[]): (r: ResultRow) => string {
  for (const col of groupBy) {
    if (!GROUPABLE.has(col)) throw new Error(`unknown grouping column ${col}`);
  }
  const fields: Record<string, (r: ResultRow) => string> = {
    experiment: (r) => r.experiment,
    profile: (r) => r.profile,
    n: (r) => String(r.n),
    estimator: (r) => r.estimator,
    seed: (r) => r.seed,
    reps: (r) => String(r.reps),
    delta: (r) => String(r.delta),
  };
  return (r) => groupBy.map((c) => fields[c](r)).join(" | ");
}

const W = 960;
const H = 640;

export function render(csvText: string, kind: FigureKind, groupBy?: string[]): string {
  const table = parseResultCsv(csvText);
  if (kind === "deviation_loglog") return renderDeviation(table, groupBy);
  if (kind === "estimator_compare") return renderCompare(table, groupBy);
  throw new Error(`unknown figure kind ${kind}`);
}

export function renderToFile(spec: PlotSpec): void {
  const svg = render(readFileSync(spec.input, "utf-8"), spec.kind, spec.groupBy);
  writeFileSync(spec.output, svg);
}

function groupBy<T>(items: T[], key: (t: T) => string): Map<string, T[]> {
  const out = new Map<string, T[]>();
  for (const it of items) {
    const k = key(it);
    const bucket = out.get(k);
    if (bucket) bucket.push(it);
    else out.set(k, [it]);
  }
  return out;
}

function svgDoc(body: string[], caption: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}">`,
    `<rect width="${W}" height="${H}" fill="white"/>`,
    ...body,
    text(12, H - 10, caption, { size: 10, fill: "#555", cls: "caption" }),
    `</svg>`,
  ].join("\n");
}

// -- deviation vs n ----------------------------------------------------------

function renderDeviation(table: ResultTable, groupCols: string[] = ["profile"]): string {
  const rows = table.rows.filter((r) => Number.isFinite(mid(r)) && mid(r) > 0);
  if (rows.length === 0) throw new Error("no positive deviation rows to plot");
  const seriesKey = groupKeyFn(groupCols);
  const margin = { left: 70, right: 190, top: 48, bottom: 64 };

  const xs = rows.map((r) => r.n);
  const ys = rows.flatMap((r) => {
    const vals = [mid(r)];
    if (r.theory !== null && r.theory > 0) vals.push(r.theory);
    return vals;
  });
  const sx = logScale(Math.min(...xs) / 1.1, Math.max(...xs) * 1.1, margin.left, W - margin.right);
  const sy = logScale(Math.min(...ys) / 1.3, Math.max(...ys) * 1.3, H - margin.bottom, margin.top);

  const body: string[] = [];
  body.push(axes(sx, sy, margin, "sample size n", "mean sup deviation"));

  const byProfile = groupBy(rows, seriesKey);
  const repCounts = [...new Set(rows.map((r) => r.reps))].sort((a, b) => a - b);
  const dashes = ["6 3", "3 3", "1.5 2.5"];
  let ci = 0;
  for (const [profile, profileRows] of byProfile) {
    const color = PALETTE[ci % PALETTE.length];
    const levelMatch = profile.match(/level=([0-9.eE+-]+)/);
    const label = levelMatch ? `q=${levelMatch[1]}` : profile;
    const parts: string[] = [];

    const theoryPts = dedupeByN(
      profileRows.filter((r) => r.theory !== null && r.theory > 0),
      (r) => r.theory as number,
    );
    if (theoryPts.length >= 2) {
      parts.push(
        polyline(
          theoryPts.map(([n, v]) => [sx(n), sy(v)]),
          color,
          { width: 2.25, cls: "theory" },
        ),
      );
    }
    for (const reps of repCounts) {
      const series = profileRows
        .filter((r) => r.reps === reps)
        .sort((a, b) => a.n - b.n);
      if (series.length < 2) continue;
      parts.push(
        polyline(
          series.map((r) => [sx(r.n), sy(mid(r))]),
          color,
          { dash: dashes[repCounts.indexOf(reps) % dashes.length], cls: "empirical" },
        ),
      );
    }
    const pooled = profileRows.sort((a, b) => a.n - b.n);
    const slope = loglogSlope(pooled.map((r) => r.n), pooled.map(mid));
    const legendY = margin.top + 16 + ci * 18;
    parts.push(
      text(W - margin.right + 14, legendY, `${label}  slope ${slope.toFixed(3)}`, {
        size: 11,
        fill: color,
        cls: "legend",
      }),
    );
    body.push(`<g class="q-series" data-label="${label}">\n${parts.join("\n")}\n</g>`);
    ci += 1;
  }
  const repLegendBase = margin.top + 16 + ci * 18 + 12;
  repCounts.forEach((reps, i) => {
    body.push(
      text(W - margin.right + 14, repLegendBase + i * 16, `reps=${reps} (dash ${i + 1})`, {
        size: 10,
        fill: "#444",
      }),
    );
  });
  body.push(text(margin.left, 24, "deviation vs sample size (log-log); empirical dashed, theory solid", { size: 13 }));
  return svgDoc(body, `config ${table.configHash}`);
}

function dedupeByN(rows: ResultRow[], value: (r: ResultRow) => number): Array<[number, number]> {
  const seen = new Map<number, number>();
  for (const r of rows) if (!seen.has(r.n)) seen.set(r.n, value(r));
  return [...seen.entries()].sort((a, b) => a[0] - b[0]);
}

// -- estimator comparison panels ----------------------------------------------

function renderCompare(table: ResultTable, groupCols?: string[]): string {
  const rows = table.rows.filter((r) => Number.isFinite(mid(r)) && mid(r) > 0);
  if (rows.length === 0) throw new Error("no positive error rows to plot");
  const panelKey = groupCols ? groupKeyFn(groupCols) : null;
  const parsed = rows.map((r) => {
    const m = r.profile.match(/^const~([a-z0-9_]+)\(k=(\d+)\)$/);
    if (!m) throw new Error(`unexpected profile descriptor ${r.profile}`);
    return { row: r, dist: panelKey ? panelKey(r) : m[1], k: Number(m[2]) };
  });
  const dists = [...new Set(parsed.map((p) => p.dist))];
  const cols = 3;
  const rowsOfPanels = Math.ceil(dists.length / cols);
  const panelW = (W - 40) / cols;
  const panelH = (H - 90) / rowsOfPanels;

  const xsAll = parsed.map((p) => p.row.n);
  const ysAll = parsed.map((p) => mid(p.row));
  const xLo = Math.min(...xsAll) / 1.1;
  const xHi = Math.max(...xsAll) * 1.1;
  const yLo = Math.min(...ysAll) / 1.3;
  const yHi = Math.max(...ysAll) * 1.3;

  const body: string[] = [];
  dists.forEach((dist, pi) => {
    const px = 20 + (pi % cols) * panelW;
    const py = 40 + Math.floor(pi / cols) * panelH;
    const margin = { left: px + 46, right: px + panelW - 12, top: py + 22, bottom: py + panelH - 34 };
    const sx = logScale(xLo, xHi, margin.left, margin.right);
    const sy = logScale(yLo, yHi, margin.bottom, margin.top);
    const parts: string[] = [];
    parts.push(
      `<rect x="${fmt(px + 40)}" y="${fmt(py + 14)}" width="${fmt(panelW - 50)}" height="${fmt(panelH - 42)}" fill="none" stroke="#ccc"/>`,
    );
    parts.push(text(px + 44, py + 12, dist, { size: 12, cls: "panel-title" }));
    const panelRows = parsed.filter((p) => p.dist === dist);
    const ks = [...new Set(panelRows.map((p) => p.k))].sort((a, b) => a - b);
    ks.forEach((k, kiIdx) => {
      const color = PALETTE[kiIdx % PALETTE.length];
      const seriesParts: string[] = [];
      for (const est of ["average", "eme"] as const) {
        const series = panelRows
          .filter((p) => p.k === k && p.row.estimator === est)
          .sort((a, b) => a.row.n - b.row.n);
        if (series.length < 2) continue;
        seriesParts.push(
          polyline(
            series.map((p) => [sx(p.row.n), sy(mid(p.row))]),
            color,
            est === "eme" ? { dash: "4 3", cls: "eme" } : { width: 2, cls: "average" },
          ),
        );
      }
      seriesParts.push(
        text(margin.right - 34, margin.top + 12 + kiIdx * 12, `k=${k}`, {
          size: 9,
          fill: color,
        }),
      );
      parts.push(`<g class="k-series" data-k="${k}">\n${seriesParts.join("\n")}\n</g>`);
    });
    // x tick labels at panel bottom
    for (const t of sx.ticks) {
      parts.push(text(sx(t), py + panelH - 20, String(t), { size: 9, anchor: "middle", fill: "#666" }));
    }
    body.push(`<g class="panel" data-dist="${dist}">\n${parts.join("\n")}\n</g>`);
  });
  body.push(
    text(20, 26, "per-coordinate empirical mean (dashed) vs grand average (solid), log-log", {
      size: 13,
    }),
  );
  return svgDoc(body, `config ${table.configHash}`);
}

// -- shared axes ---------------------------------------------------------------

function axes(
  sx: ReturnType<typeof logScale>,
  sy: ReturnType<typeof logScale>,
  margin: { left: number; right: number; top: number; bottom: number },
  xLabel: string,
  yLabel: string,
): string {
  const parts: string[] = [];
  const x0 = margin.left;
  const x1 = W - margin.right;
  const y0 = H - margin.bottom;
  const y1 = margin.top;
  parts.push(line(x0, y0, x1, y0, "#333"));
  parts.push(line(x0, y0, x0, y1, "#333"));
  for (const t of sx.ticks) {
    parts.push(line(sx(t), y0, sx(t), y1, "#eee"));
    parts.push(text(sx(t), y0 + 16, String(t), { size: 10, anchor: "middle", fill: "#444" }));
  }
  for (const t of sy.ticks) {
    parts.push(line(x0, sy(t), x1, sy(t), "#eee"));
    parts.push(text(x0 - 6, sy(t) + 3, t.toExponential(0), { size: 10, anchor: "end", fill: "#444" }));
  }
  parts.push(text((x0 + x1) / 2, y0 + 34, xLabel, { size: 11, anchor: "middle" }));
  parts.push(text(x0 - 52, y1 - 10, yLabel, { size: 11 }));
  return `<g class="axes">\n${parts.join("\n")}\n</g>`;
}
