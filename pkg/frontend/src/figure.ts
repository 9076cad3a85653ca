/**
 * Campaign figure renderer: panels by m, distance on the x axis, one line
 * per strategy (and per source file in overlay mode), fidelity on a linear
 * [0, 1] axis and attempts on a log axis, shaded +/-1 stderr bands.
 *
 * Rendering is pure string generation over sorted inputs, so identical rows
 * always produce byte-identical SVG.  Series lines break at missing sweep
 * points instead of interpolating across the gap.
 */

import { ResultRow } from "./csv.js";

export type Metric = "fidelity" | "attempts";

export interface FigureOptions {
  panels?: number[]; // subset of m values; default: all present
  metrics?: Metric[]; // default: both
}

export class EmptySelectionError extends Error {}

const PANEL_W = 270;
const PANEL_H = 200;
const MARGIN = { top: 34, right: 18, bottom: 46, left: 62 };
const PANEL_GAP_X = 26;
const PANEL_GAP_Y = 40;
const LEGEND_H = 26;

const STRATEGY_ORDER = ["qudit", "qubit_one_shot", "qubit_all_keep"];
const STRATEGY_LABEL: Record<string, string> = {
  qudit: "multiplexed qudit",
  qubit_one_shot: "qubit one-shot",
  qubit_all_keep: "qubit all-keep",
};
const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
];

interface SeriesKey {
  strategy: string;
  source: string;
}

function fmt(x: number): string {
  // Fixed-precision coordinates keep the output stable across platforms.
  return x.toFixed(2);
}

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function niceTicksLinear(lo: number, hi: number, n = 5): number[] {
  if (hi <= lo) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const candidates = [step, 2 * step, 2.5 * step, 5 * step, 10 * step];
  const chosen = candidates.find((s) => span / s <= n) ?? 10 * step;
  const out: number[] = [];
  for (let v = Math.ceil(lo / chosen) * chosen; v <= hi + 1e-12; v += chosen) {
    out.push(Number(v.toFixed(10)));
  }
  return out;
}

function decadeTicks(lo: number, hi: number): number[] {
  const out: number[] = [];
  for (let e = Math.ceil(Math.log10(lo)); e <= Math.floor(Math.log10(hi)); e++) {
    out.push(Math.pow(10, e));
  }
  return out.length > 0 ? out : [lo];
}

function formatTick(v: number): string {
  if (v !== 0 && (Math.abs(v) >= 1e4 || Math.abs(v) < 1e-2)) {
    const e = Math.floor(Math.log10(Math.abs(v)));
    const mant = v / Math.pow(10, e);
    return mant === 1 ? `1e${e}` : `${mant.toPrecision(2)}e${e}`;
  }
  return Number(v.toPrecision(4)).toString();
}

function seriesKeys(rows: ResultRow[]): SeriesKey[] {
  const sources = [...new Set(rows.map((r) => r.source))].sort();
  const strategies = [...new Set(rows.map((r) => r.strategy))].sort(
    (a, b) =>
      (STRATEGY_ORDER.indexOf(a) + 100) % 103 -
      ((STRATEGY_ORDER.indexOf(b) + 100) % 103),
  );
  const keys: SeriesKey[] = [];
  for (const source of sources) {
    for (const strategy of strategies) {
      if (rows.some((r) => r.source === source && r.strategy === strategy)) {
        keys.push({ strategy, source });
      }
    }
  }
  return keys;
}

function seriesLabel(key: SeriesKey, overlay: boolean): string {
  const base = STRATEGY_LABEL[key.strategy] ?? key.strategy;
  return overlay ? `${base} [${key.source}]` : base;
}

/** Split a panel's series into runs of consecutive grid distances so gaps in
 * the sweep stay gaps. */
export function splitRuns(
  grid: number[],
  points: Map<number, ResultRow>,
): ResultRow[][] {
  const runs: ResultRow[][] = [];
  let current: ResultRow[] = [];
  for (const L of grid) {
    const row = points.get(L);
    if (row === undefined) {
      if (current.length > 0) runs.push(current);
      current = [];
    } else {
      current.push(row);
    }
  }
  if (current.length > 0) runs.push(current);
  return runs;
}

function metricValue(row: ResultRow, metric: Metric): number {
  return metric === "fidelity" ? row.average_fidelity : row.average_attempts;
}

function metricBand(row: ResultRow, metric: Metric): [number, number] | null {
  if (metric !== "fidelity" || row.fidelity_stderr <= 0) return null;
  return [
    row.average_fidelity - row.fidelity_stderr,
    row.average_fidelity + row.fidelity_stderr,
  ];
}

export function renderFigure(rows: ResultRow[], options: FigureOptions = {}): string {
  const metrics: Metric[] = options.metrics ?? ["fidelity", "attempts"];
  const allPanels = [...new Set(rows.map((r) => r.m))].sort((a, b) => a - b);
  const panels =
    options.panels !== undefined
      ? allPanels.filter((m) => options.panels!.includes(m))
      : allPanels;
  if (panels.length === 0 || metrics.length === 0 || rows.length === 0) {
    throw new EmptySelectionError(
      "no rows match the requested panels/metrics selection",
    );
  }
  const overlay = new Set(rows.map((r) => r.source)).size > 1;
  const keys = seriesKeys(rows);
  const color = new Map(
    keys.map((k, i) => [JSON.stringify(k), PALETTE[i % PALETTE.length]]),
  );

  const width =
    MARGIN.left +
    panels.length * PANEL_W +
    (panels.length - 1) * PANEL_GAP_X +
    MARGIN.right;
  const height =
    MARGIN.top +
    metrics.length * PANEL_H +
    (metrics.length - 1) * PANEL_GAP_Y +
    MARGIN.bottom +
    LEGEND_H;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="#ffffff"/>`);

  panels.forEach((m, col) => {
    const panelRows = rows.filter((r) => r.m === m);
    const grid = [...new Set(panelRows.map((r) => r.L_km))].sort((a, b) => a - b);
    const xLo = grid[0];
    const xHi = grid[grid.length - 1];
    const xSpan = xHi > xLo ? xHi - xLo : 1;
    const x0 = MARGIN.left + col * (PANEL_W + PANEL_GAP_X);
    const xOf = (L: number) => x0 + ((L - xLo) / xSpan) * PANEL_W;

    metrics.forEach((metric, rowIdx) => {
      const y0 = MARGIN.top + rowIdx * (PANEL_H + PANEL_GAP_Y);
      let yOf: (v: number) => number;
      let ticks: number[];
      if (metric === "fidelity") {
        yOf = (v) => y0 + PANEL_H - Math.min(Math.max(v, 0), 1) * PANEL_H;
        ticks = [0, 0.25, 0.5, 0.75, 1.0];
      } else {
        const vals = panelRows.map((r) => r.average_attempts).filter((v) => v > 0);
        const lo = Math.min(...vals);
        const hi = Math.max(...vals);
        const logLo = Math.floor(Math.log10(lo));
        const logHi = Math.ceil(Math.log10(hi * 1.0000001));
        const span = Math.max(logHi - logLo, 1);
        yOf = (v) => y0 + PANEL_H - ((Math.log10(v) - logLo) / span) * PANEL_H;
        ticks = decadeTicks(Math.pow(10, logLo), Math.pow(10, logHi));
      }

      // frame, gridlines, ticks
      parts.push(
        `<rect x="${fmt(x0)}" y="${fmt(y0)}" width="${PANEL_W}" height="${PANEL_H}" ` +
          `fill="none" stroke="#444444" stroke-width="1"/>`,
      );
      for (const t of ticks) {
        const y = yOf(t);
        parts.push(
          `<line x1="${fmt(x0)}" y1="${fmt(y)}" x2="${fmt(x0 + PANEL_W)}" y2="${fmt(y)}" ` +
            `stroke="#dddddd" stroke-width="0.5"/>`,
        );
        parts.push(
          `<text x="${fmt(x0 - 6)}" y="${fmt(y + 3)}" text-anchor="end" ` +
            `font-size="9">${esc(formatTick(t))}</text>`,
        );
      }
      for (const L of niceTicksLinear(xLo, xHi, 6)) {
        const x = xOf(L);
        parts.push(
          `<line x1="${fmt(x)}" y1="${fmt(y0 + PANEL_H)}" x2="${fmt(x)}" ` +
            `y2="${fmt(y0 + PANEL_H + 4)}" stroke="#444444" stroke-width="1"/>`,
        );
        parts.push(
          `<text x="${fmt(x)}" y="${fmt(y0 + PANEL_H + 15)}" text-anchor="middle" ` +
            `font-size="9">${esc(formatTick(L))}</text>`,
        );
      }
      if (rowIdx === metrics.length - 1) {
        parts.push(
          `<text x="${fmt(x0 + PANEL_W / 2)}" y="${fmt(y0 + PANEL_H + 32)}" ` +
            `text-anchor="middle" font-size="11">distance L (km)</text>`,
        );
      }
      if (col === 0) {
        const label =
          metric === "fidelity" ? "average fidelity" : "average attempts (log)";
        const cy = y0 + PANEL_H / 2;
        parts.push(
          `<text x="${fmt(x0 - 44)}" y="${fmt(cy)}" text-anchor="middle" ` +
            `font-size="11" transform="rotate(-90 ${fmt(x0 - 44)} ${fmt(cy)})">` +
            `${esc(label)}</text>`,
        );
      }
      if (rowIdx === 0) {
        parts.push(
          `<text x="${fmt(x0 + PANEL_W / 2)}" y="${fmt(y0 - 8)}" ` +
            `text-anchor="middle" font-size="12" font-weight="bold">m = ${m}</text>`,
        );
      }

      // series
      for (const key of keys) {
        const stroke = color.get(JSON.stringify(key))!;
        const points = new Map(
          panelRows
            .filter((r) => r.strategy === key.strategy && r.source === key.source)
            .map((r) => [r.L_km, r]),
        );
        if (points.size === 0) continue;
        for (const run of splitRuns(grid, points)) {
          const band = run
            .map((r) => ({ r, b: metricBand(r, metric) }))
            .filter((x) => x.b !== null);
          if (band.length >= 2) {
            const upper = band.map(
              ({ r, b }) => `${fmt(xOf(r.L_km))},${fmt(yOf(b![1]))}`,
            );
            const lower = band
              .slice()
              .reverse()
              .map(({ r, b }) => `${fmt(xOf(r.L_km))},${fmt(yOf(b![0]))}`);
            parts.push(
              `<polygon points="${upper.concat(lower).join(" ")}" ` +
                `fill="${stroke}" fill-opacity="0.15" stroke="none"/>`,
            );
          }
          const coords = run.map(
            (r) => `${fmt(xOf(r.L_km))},${fmt(yOf(metricValue(r, metric)))}`,
          );
          if (coords.length > 1) {
            parts.push(
              `<polyline points="${coords.join(" ")}" fill="none" ` +
                `stroke="${stroke}" stroke-width="1.5"/>`,
            );
          }
          for (const r of run) {
            parts.push(
              `<circle cx="${fmt(xOf(r.L_km))}" cy="${fmt(yOf(metricValue(r, metric)))}" ` +
                `r="2.4" fill="${stroke}"/>`,
            );
          }
        }
      }
    });
  });

  // legend
  const legendY = height - LEGEND_H + 8;
  let legendX = MARGIN.left;
  for (const key of keys) {
    const stroke = color.get(JSON.stringify(key))!;
    const label = seriesLabel(key, overlay);
    parts.push(
      `<line x1="${fmt(legendX)}" y1="${fmt(legendY)}" x2="${fmt(legendX + 22)}" ` +
        `y2="${fmt(legendY)}" stroke="${stroke}" stroke-width="2"/>`,
    );
    parts.push(
      `<text x="${fmt(legendX + 27)}" y="${fmt(legendY + 3.5)}" ` +
        `font-size="10">${esc(label)}</text>`,
    );
    legendX += 27 + 7 * label.length + 24;
  }

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
