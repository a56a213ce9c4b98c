/**
 * Reading and validation of betolo trace CSVs.
 *
 * A trace file is the per-round output of one experiment run: the exact
 * header `round,cum_loss,wealth,algorithm,config_id`, then one row per
 * round with strictly increasing round numbers and a single constant
 * (algorithm, config_id) pair.  Anything else is a hard error carrying
 * the offending filename.
 */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

export const TRACE_HEADER = [
  "round",
  "cum_loss",
  "wealth",
  "algorithm",
  "config_id",
] as const;

export interface TracePoint {
  round: number;
  cumLoss: number;
  wealth: number;
}

export interface TraceSeries {
  path: string;
  configId: string;
  algorithm: string;
  points: TracePoint[];
}

/** Raised for any unreadable or malformed trace; message names the file. */
export class TraceError extends Error {
  readonly path: string;

  constructor(path: string, detail: string) {
    super(`${path}: ${detail}`);
    this.name = "TraceError";
    this.path = path;
  }
}

function parseNumber(
  path: string,
  row: number,
  column: string,
  cell: string,
): number {
  const text = cell.trim();
  const value = text === "" ? Number.NaN : Number(text);
  if (!Number.isFinite(value)) {
    throw new TraceError(
      path,
      `row ${row}: non-numeric ${column} value ${JSON.stringify(cell)}`,
    );
  }
  return value;
}

/** Parse one trace CSV, enforcing every invariant of the format. */
export function readTraceFile(path: string): TraceSeries {
  let content: string;
  try {
    content = readFileSync(path, "utf8");
  } catch (err) {
    throw new TraceError(path, `cannot read file (${(err as Error).message})`);
  }

  if (content.trim() === "") {
    throw new TraceError(path, "empty file: expected a trace header");
  }

  const parsed = Papa.parse<string[]>(content, { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0]!;
    throw new TraceError(path, `CSV parse error: ${first.message}`);
  }
  const rows = parsed.data;
  if (rows.length === 0) {
    throw new TraceError(path, "empty file: expected a trace header");
  }

  const header = rows[0]!;
  if (
    header.length !== TRACE_HEADER.length ||
    TRACE_HEADER.some((name, i) => header[i] !== name)
  ) {
    throw new TraceError(
      path,
      `bad header ${JSON.stringify(header.join(","))}, ` +
        `expected ${JSON.stringify(TRACE_HEADER.join(","))}`,
    );
  }
  if (rows.length === 1) {
    throw new TraceError(path, "empty trace: header but no rounds");
  }

  const points: TracePoint[] = [];
  let configId = "";
  let algorithm = "";
  for (let i = 1; i < rows.length; i++) {
    const row = rows[i]!;
    if (row.length !== TRACE_HEADER.length) {
      throw new TraceError(
        path,
        `row ${i}: expected ${TRACE_HEADER.length} fields, got ${row.length}`,
      );
    }
    const round = parseNumber(path, i, "round", row[0]!);
    if (!Number.isInteger(round)) {
      throw new TraceError(path, `row ${i}: round ${row[0]} is not an integer`);
    }
    const cumLoss = parseNumber(path, i, "cum_loss", row[1]!);
    const wealth = parseNumber(path, i, "wealth", row[2]!);
    const rowAlgorithm = row[3]!;
    const rowConfigId = row[4]!;
    if (i === 1) {
      algorithm = rowAlgorithm;
      configId = rowConfigId;
      if (configId.trim() === "") {
        throw new TraceError(path, "row 1: empty config_id");
      }
    } else {
      if (rowConfigId !== configId) {
        throw new TraceError(
          path,
          `row ${i}: config_id changes mid-file ` +
            `(${JSON.stringify(configId)} then ${JSON.stringify(rowConfigId)})`,
        );
      }
      if (rowAlgorithm !== algorithm) {
        throw new TraceError(
          path,
          `row ${i}: algorithm changes mid-file ` +
            `(${JSON.stringify(algorithm)} then ${JSON.stringify(rowAlgorithm)})`,
        );
      }
      const previous = points[points.length - 1]!.round;
      if (round <= previous) {
        throw new TraceError(
          path,
          `row ${i}: round ${round} not greater than previous round ${previous}`,
        );
      }
    }
    points.push({ round, cumLoss, wealth });
  }
  return { path, configId, algorithm, points };
}

/**
 * Read a set of trace files and return the series sorted by config_id
 * (the sort fixes line colors deterministically).  Two files claiming
 * the same config_id would make the legend ambiguous and are an error.
 */
export function readTraceSet(paths: string[]): TraceSeries[] {
  const series = paths.map(readTraceFile);
  const byId = new Map<string, TraceSeries>();
  for (const s of series) {
    const existing = byId.get(s.configId);
    if (existing !== undefined) {
      throw new TraceError(
        s.path,
        `duplicate config_id ${JSON.stringify(s.configId)} ` +
          `(already provided by ${existing.path})`,
      );
    }
    byId.set(s.configId, s);
  }
  return [...series].sort((a, b) => (a.configId < b.configId ? -1 : 1));
}
