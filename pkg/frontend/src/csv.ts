/**
 * Reader for bernlab result CSVs: `#`-prefixed header comments (carrying the
 * run-manifest hash), a fixed column row, then data rows.
 */

import Papa from "papaparse";

export const REQUIRED_COLUMNS = [
  "experiment",
  "profile",
  "n",
  "estimator",
  "low",
  "high",
  "std_err",
  "theory",
  "seed",
  "reps",
  "delta",
] as const;

export interface ResultRow {
  experiment: string;
  profile: string;
  n: number;
  estimator: string;
  low: number;
  high: number;
  stdErr: number;
  theory: number | null;
  seed: string;
  reps: number;
  delta: number;
}

export interface ResultTable {
  configHash: string;
  notes: string[];
  rows: ResultRow[];
}

export function parseResultCsv(text: string): ResultTable {
  const lines = text.split(/\r?\n/);
  let configHash = "";
  const notes: string[] = [];
  const bodyLines: string[] = [];
  for (const line of lines) {
    if (line.startsWith("#")) {
      const hash = line.match(/^#\s*config_hash=([0-9a-f]+)\s*$/);
      if (hash) configHash = hash[1];
      const note = line.match(/^#\s*note:\s*(.*)$/);
      if (note) notes.push(note[1]);
    } else if (line.trim() !== "") {
      bodyLines.push(line);
    }
  }
  if (bodyLines.length === 0) {
    throw new Error("empty CSV: no header row");
  }
  const parsed = Papa.parse<string[]>(bodyLines.join("\n"), {
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new Error(`CSV parse error: ${parsed.errors[0].message}`);
  }
  const [header, ...records] = parsed.data;
  for (const col of REQUIRED_COLUMNS) {
    if (!header.includes(col)) {
      throw new Error(`missing column ${col}`);
    }
  }
  if (records.length === 0) {
    throw new Error("empty CSV: no data rows");
  }
  const idx = (name: string) => header.indexOf(name);
  const rows: ResultRow[] = records.map((cells) => ({
    experiment: cells[idx("experiment")],
    profile: cells[idx("profile")],
    n: Number(cells[idx("n")]),
    estimator: cells[idx("estimator")],
    low: Number(cells[idx("low")]),
    high: Number(cells[idx("high")]),
    stdErr: Number(cells[idx("std_err")]),
    theory: cells[idx("theory")] === "" ? null : Number(cells[idx("theory")]),
    seed: cells[idx("seed")],
    reps: Number(cells[idx("reps")]),
    delta: Number(cells[idx("delta")]),
  }));
  return { configHash, notes, rows };
}

/** Midpoint of the reported bracket, the plotted quantity. */
export function mid(row: ResultRow): number {
  return (row.low + row.high) / 2;
}
