#!/usr/bin/env node
/**
 * plot --in results.csv --kind deviation_loglog --out fig.svg
 *
 * Exit codes: 0 success, 2 usage error, 1 render/IO failure (missing
 * columns, empty CSV, unreadable input, unwritable output).
 */

import { parseArgs } from "node:util";

import { FigureKind, renderToFile } from "./render.js";

const KINDS: FigureKind[] = ["deviation_loglog", "estimator_compare"];

export function main(argv: string[]): number {
  let values: { in?: string; kind?: string; out?: string };
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        in: { type: "string" },
        kind: { type: "string" },
        out: { type: "string" },
      },
    }));
  } catch (e) {
    console.error(`usage error: ${(e as Error).message}`);
    return 2;
  }
  if (!values.in || !values.out || !values.kind) {
    console.error("usage: plot --in results.csv --kind <deviation_loglog|estimator_compare> --out fig.svg");
    return 2;
  }
  if (!KINDS.includes(values.kind as FigureKind)) {
    console.error(`unknown kind ${values.kind}; expected one of ${KINDS.join(", ")}`);
    return 2;
  }
  try {
    renderToFile({ input: values.in, kind: values.kind as FigureKind, output: values.out });
  } catch (e) {
    console.error(`plot failed: ${(e as Error).message}`);
    return 1;
  }
  return 0;
}

const invokedDirectly = process.argv[1] && import.meta.url.endsWith(process.argv[1].split("/").pop() as string);
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
