/**
 * Reader for the simulator's results CSV contract.
 *
 * The contract is a fixed header; rows are keyed by (m, L_km, strategy,
 * seed, engine).  Fields never contain commas (the per-pair list is
 * semicolon-separated), so a line split suffices, but quoted fields are
 * tolerated for robustness.
 */

export const REQUIRED_COLUMNS = [
  "m",
  "L_km",
  "strategy",
  "success_probability",
  "average_attempts",
  "average_fidelity",
  "per_pair_fidelities",
  "fidelity_stderr",
  "n_trajectories",
  "seed",
  "wall_time_s",
  "engine",
] as const;

export interface ResultRow {
  m: number;
  L_km: number;
  strategy: string;
  success_probability: number;
  average_attempts: number;
  average_fidelity: number;
  per_pair_fidelities: number[];
  fidelity_stderr: number;
  n_trajectories: number;
  seed: number;
  wall_time_s: number;
  engine: string;
  /** label of the source file, used to disambiguate overlaid CSVs */
  source: string;
}

export class CsvContractError extends Error {}

function splitLine(line: string): string[] {
  const out: string[] = [];
  let field = "";
  let quoted = false;
  for (let i = 0; i < line.length; i++) {
    const ch = line[i];
    if (quoted) {
      if (ch === '"' && line[i + 1] === '"') {
        field += '"';
        i++;
      } else if (ch === '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch === '"') {
      quoted = true;
    } else if (ch === ",") {
      out.push(field);
      field = "";
    } else {
      field += ch;
    }
  }
  out.push(field);
  return out;
}

function toNumber(column: string, value: string, line: number): number {
  const num = Number(value);
  if (value.trim() === "" || Number.isNaN(num)) {
    throw new CsvContractError(
      `line ${line}: column '${column}' has non-numeric value '${value}'`,
    );
  }
  return num;
}

export function parseResultsCsv(text: string, source: string): ResultRow[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new CsvContractError(`${source}: file is empty`);
  }
  const header = splitLine(lines[0]);
  const missing = REQUIRED_COLUMNS.filter((c) => !header.includes(c));
  if (missing.length > 0) {
    throw new CsvContractError(
      `${source}: missing required column(s): ${missing.join(", ")}. ` +
        `Expected the simulator results contract (${REQUIRED_COLUMNS.join(", ")}).`,
    );
  }
  const index = new Map(header.map((name, i) => [name, i]));
  const rows: ResultRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const fields = splitLine(lines[i]);
    if (fields.length !== header.length) {
      throw new CsvContractError(
        `${source}: line ${i + 1}: expected ${header.length} fields, got ${fields.length}`,
      );
    }
    const get = (col: string) => fields[index.get(col)!];
    const lineNo = i + 1;
    rows.push({
      m: toNumber("m", get("m"), lineNo),
      L_km: toNumber("L_km", get("L_km"), lineNo),
      strategy: get("strategy"),
      success_probability: toNumber(
        "success_probability",
        get("success_probability"),
        lineNo,
      ),
      average_attempts: toNumber(
        "average_attempts",
        get("average_attempts"),
        lineNo,
      ),
      average_fidelity: toNumber(
        "average_fidelity",
        get("average_fidelity"),
        lineNo,
      ),
      per_pair_fidelities: get("per_pair_fidelities")
        .split(";")
        .filter((x) => x.length > 0)
        .map((x) => toNumber("per_pair_fidelities", x, lineNo)),
      fidelity_stderr: toNumber("fidelity_stderr", get("fidelity_stderr"), lineNo),
      n_trajectories: toNumber("n_trajectories", get("n_trajectories"), lineNo),
      seed: toNumber("seed", get("seed"), lineNo),
      wall_time_s: toNumber("wall_time_s", get("wall_time_s"), lineNo),
      engine: get("engine"),
      source,
    });
  }
  return rows;
}
