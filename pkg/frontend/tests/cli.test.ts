import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import { REQUIRED_COLUMNS } from "../src/csv.js";
import { main, parseArgs } from "../src/cli.js";

const HEADER = REQUIRED_COLUMNS.join(",");

function csvText(points: Array<[number, number, string]>): string {
  const lines = points.map(
    ([m, L, s]) =>
      `${m},${L},${s},0.25,${Math.exp(L / 20)},${0.95 - L / 1000},` +
      `0.94;0.92,0.002,10000,7,1.5,trajectory`,
  );
  return `${HEADER}\n${lines.join("\n")}\n`;
}

let dir: string;
let stderrSpy: ReturnType<typeof vi.spyOn>;
let stdoutSpy: ReturnType<typeof vi.spyOn>;

beforeEach(() => {
  dir = mkdtempSync(join(tmpdir(), "plot-"));
  stderrSpy = vi.spyOn(process.stderr, "write").mockImplementation(() => true);
  stdoutSpy = vi.spyOn(process.stdout, "write").mockImplementation(() => true);
});

afterEach(() => {
  stderrSpy.mockRestore();
  stdoutSpy.mockRestore();
});

function stderrText(): string {
  return stderrSpy.mock.calls.map((c) => String(c[0])).join("");
}

describe("parseArgs", () => {
  it("parses the full flag set", () => {
    const args = parseArgs([
      "--csv", "a.csv", "--csv", "b.csv", "--out", "fig.svg",
      "--panels", "2,5", "--metric", "fidelity",
    ]);
    expect(args.csv).toEqual(["a.csv", "b.csv"]);
    expect(args.out).toBe("fig.svg");
    expect(args.panels).toEqual([2, 5]);
    expect(args.metrics).toEqual(["fidelity"]);
  });

  it("defaults to both metrics", () => {
    const args = parseArgs(["--csv", "a.csv", "--out", "fig.svg"]);
    expect(args.metrics).toEqual(["fidelity", "attempts"]);
  });

  it("rejects missing required flags and bad values", () => {
    expect(() => parseArgs(["--out", "x.svg"])).toThrow(/--csv is required/);
    expect(() => parseArgs(["--csv", "a.csv"])).toThrow(/--out is required/);
    expect(() => parseArgs(["--csv", "a.csv", "--out", "x", "--metric", "z"]))
      .toThrow(/--metric/);
    expect(() => parseArgs(["--csv", "a.csv", "--out", "x", "--panels", "a"]))
      .toThrow(/--panels/);
    expect(() => parseArgs(["--bogus"])).toThrow(/unknown argument/);
  });
});

describe("main", () => {
  it("writes an SVG figure for a valid CSV", () => {
    const csv = join(dir, "results.csv");
    const out = join(dir, "fig.svg");
    writeFileSync(csv, csvText([[2, 10, "qudit"], [2, 20, "qudit"]]));
    expect(main(["--csv", csv, "--out", out])).toBe(0);
    const svg = readFileSync(out, "utf8");
    expect(svg).toContain("<svg ");
    expect(svg).toContain("m = 2");
  });

  it("renders a single-row CSV without error", () => {
    const csv = join(dir, "one.csv");
    const out = join(dir, "fig.svg");
    writeFileSync(csv, csvText([[1, 50, "qudit"]]));
    expect(main(["--csv", csv, "--out", out])).toBe(0);
    expect(readFileSync(out, "utf8")).toContain("</svg>");
  });

  it("refuses a CSV missing required columns, naming them", () => {
    const csv = join(dir, "bad.csv");
    writeFileSync(csv, "m,L_km,strategy\n2,10,qudit\n");
    expect(main(["--csv", csv, "--out", join(dir, "fig.svg")])).toBe(2);
    expect(stderrText()).toContain("missing required column(s)");
    expect(stderrText()).toContain("average_fidelity");
  });

  it("fails cleanly on an unreadable path", () => {
    expect(main(["--csv", join(dir, "nope.csv"), "--out", join(dir, "f.svg")]))
      .toBe(1);
    expect(stderrText()).toContain("cannot read");
  });

  it("overlays two CSVs with disambiguated legend entries", () => {
    const a = join(dir, "run_a.csv");
    const b = join(dir, "run_b.csv");
    const out = join(dir, "fig.svg");
    writeFileSync(a, csvText([[2, 10, "qudit"], [2, 20, "qudit"]]));
    writeFileSync(b, csvText([[2, 10, "qudit"], [2, 20, "qudit"]]));
    expect(main(["--csv", a, "--csv", b, "--out", out])).toBe(0);
    const svg = readFileSync(out, "utf8");
    expect(svg).toContain("[run_a.csv]");
    expect(svg).toContain("[run_b.csv]");
  });

  it("produces byte-identical output across runs", () => {
    const csv = join(dir, "results.csv");
    const out1 = join(dir, "a.svg");
    const out2 = join(dir, "b.svg");
    writeFileSync(
      csv,
      csvText([
        [2, 10, "qudit"], [2, 20, "qudit"],
        [2, 10, "qubit_one_shot"], [2, 20, "qubit_one_shot"],
      ]),
    );
    main(["--csv", csv, "--out", out1]);
    main(["--csv", csv, "--out", out2]);
    expect(readFileSync(out1, "utf8")).toBe(readFileSync(out2, "utf8"));
  });

  it("errors when --panels filters everything out", () => {
    const csv = join(dir, "results.csv");
    writeFileSync(csv, csvText([[2, 10, "qudit"]]));
    expect(main(["--csv", csv, "--out", join(dir, "f.svg"), "--panels", "6"]))
      .toBe(1);
  });

  it("returns 1 on usage errors", () => {
    expect(main(["--metric", "fidelity"])).toBe(1);
    expect(stderrText()).toContain("usage:");
  });
});
