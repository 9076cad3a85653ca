#!/usr/bin/env node
/**
 * Command-line entry point: `plot --csv PATH [--csv PATH2] --out PATH
 * [--panels m[,m...]] [--metric fidelity|attempts|both]`.
 *
 * Reads one or more campaign CSV files, renders the multi-panel SVG figure,
 * and writes it to --out.  Contract violations (missing columns, malformed
 * numbers) exit with status 2 and a message naming the problem; usage errors
 * exit with status 1.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { basename } from "node:path";
import { parseResultsCsv, CsvContractError, ResultRow } from "./csv.js";
import { renderFigure, Metric, EmptySelectionError } from "./figure.js";

const USAGE =
  "usage: plot --csv PATH [--csv PATH2] --out PATH " +
  "[--panels m[,m...]] [--metric fidelity|attempts|both]";

interface Args {
  csv: string[];
  out: string;
  panels?: number[];
  metrics: Metric[];
}

export function parseArgs(argv: string[]): Args {
  const csv: string[] = [];
  let out: string | undefined;
  let panels: number[] | undefined;
  let metrics: Metric[] = ["fidelity", "attempts"];
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const value = argv[i + 1];
    switch (flag) {
      case "--csv":
        if (value === undefined) throw new Error(`${flag} requires a path`);
        csv.push(value);
        i++;
        break;
      case "--out":
        if (value === undefined) throw new Error(`${flag} requires a path`);
        out = value;
        i++;
        break;
      case "--panels": {
        if (value === undefined) throw new Error(`${flag} requires a value`);
        panels = value.split(",").map((p) => {
          const m = Number(p);
          if (!Number.isInteger(m) || m < 1) {
            throw new Error(`--panels expects positive integers, got '${p}'`);
          }
          return m;
        });
        i++;
        break;
      }
      case "--metric":
        if (value === "fidelity" || value === "attempts") {
          metrics = [value];
        } else if (value === "both") {
          metrics = ["fidelity", "attempts"];
        } else {
          throw new Error(
            `--metric must be 'fidelity', 'attempts', or 'both', got '${value}'`,
          );
        }
        i++;
        break;
      case "--help":
      case "-h":
        throw new Error(USAGE);
      default:
        throw new Error(`unknown argument '${flag}'\n${USAGE}`);
    }
  }
  if (csv.length === 0) throw new Error(`--csv is required\n${USAGE}`);
  if (out === undefined) throw new Error(`--out is required\n${USAGE}`);
  return { csv, out, panels, metrics };
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    process.stderr.write(`${(err as Error).message}\n`);
    return 1;
  }

  const rows: ResultRow[] = [];
  for (const path of args.csv) {
    let text: string;
    try {
      text = readFileSync(path, "utf8");
    } catch (err) {
      process.stderr.write(`cannot read ${path}: ${(err as Error).message}\n`);
      return 1;
    }
    const label = args.csv.length > 1 ? basename(path) : "";
    try {
      rows.push(...parseResultsCsv(text, label));
    } catch (err) {
      if (err instanceof CsvContractError) {
        process.stderr.write(`${path}: ${err.message}\n`);
        return 2;
      }
      throw err;
    }
  }

  let svg: string;
  try {
    svg = renderFigure(rows, { panels: args.panels, metrics: args.metrics });
  } catch (err) {
    if (err instanceof EmptySelectionError) {
      process.stderr.write(`${err.message}\n`);
      return 1;
    }
    throw err;
  }
  writeFileSync(args.out, svg, "utf8");
  process.stdout.write(`wrote ${args.out}\n`);
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(basename(process.argv[1]));
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
