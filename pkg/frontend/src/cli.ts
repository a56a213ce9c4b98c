#!/usr/bin/env node
/**
 * betolo-plot: render betolo trace CSVs to a cumulative-loss PNG.
 *
 *   betolo-plot --in '<glob>' --out <png-path> [--logy] [--overwrite]
 *
 * Exit codes: 0 success, 2 usage error, 3 trace/data error, 4 output
 * collision without --overwrite.
 */

import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";
import { globSync } from "glob";
import { OutputCollisionError, PlotDataError, plotLosses } from "./plot.js";
import { TraceError } from "./trace.js";

export const EXIT_OK = 0;
export const EXIT_USAGE = 2;
export const EXIT_DATA = 3;
export const EXIT_COLLISION = 4;

const USAGE =
  "usage: betolo-plot --in <glob> --out <png-path> [--logy] [--overwrite]";

class UsageError extends Error {}

function parse(argv: string[]): {
  pattern: string;
  out: string;
  logY: boolean;
  overwrite: boolean;
  help: boolean;
} {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        in: { type: "string" },
        out: { type: "string" },
        logy: { type: "boolean", default: false },
        overwrite: { type: "boolean", default: false },
        help: { type: "boolean", short: "h", default: false },
      },
      allowPositionals: false,
    });
  } catch (err) {
    throw new UsageError((err as Error).message);
  }
  const values = parsed.values;
  if (values.help) {
    return { pattern: "", out: "", logY: false, overwrite: false, help: true };
  }
  if (values.in === undefined || values.in === "") {
    throw new UsageError("missing required flag --in <glob>");
  }
  if (values.out === undefined || values.out === "") {
    throw new UsageError("missing required flag --out <png-path>");
  }
  return {
    pattern: values.in,
    out: values.out,
    logY: values.logy,
    overwrite: values.overwrite,
    help: false,
  };
}

/** Run the tool; returns the process exit code instead of exiting. */
export function main(argv: string[]): number {
  let args;
  try {
    args = parse(argv);
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    console.error(USAGE);
    return EXIT_USAGE;
  }
  if (args.help) {
    console.log(USAGE);
    return EXIT_OK;
  }

  const paths = globSync(args.pattern, { nodir: true }).sort();
  if (paths.length === 0) {
    console.error(`error: no trace files match ${JSON.stringify(args.pattern)}`);
    return EXIT_DATA;
  }

  try {
    const series = plotLosses(paths, args.out, {
      logY: args.logY,
      overwrite: args.overwrite,
    });
    const points = series.reduce((n, s) => n + s.points.length, 0);
    console.log(
      `wrote ${args.out}: ${series.length} series ` +
        `(${series.map((s) => s.configId).join(", ")}), ${points} points`,
    );
    return EXIT_OK;
  } catch (err) {
    if (err instanceof OutputCollisionError) {
      console.error(`error: ${err.message}`);
      return EXIT_COLLISION;
    }
    if (err instanceof TraceError || err instanceof PlotDataError) {
      console.error(`error: ${err.message}`);
      return EXIT_DATA;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href;
if (invokedDirectly) {
  process.exitCode = main(process.argv.slice(2));
}
