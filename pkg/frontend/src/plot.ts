/**
 * Cumulative-loss chart rendering: one line per config_id, round on the
 * x axis, cumulative loss on the y axis, optional log-y.  Styling is a
 * pure function of the sorted config ids, so a given trace set always
 * renders to the identical PNG.
 */

import { existsSync, writeFileSync } from "node:fs";
import { PNG } from "pngjs";
import { BLACK, Color, DARK_GREY, Framebuffer, GREY, WHITE } from "./raster.js";
import { formatTick, linearScale, logScale, Scale } from "./scale.js";
import { textWidth } from "./font.js";
import { readTraceSet, TraceSeries } from "./trace.js";

/** Raised when the output path exists and overwrite was not requested. */
export class OutputCollisionError extends Error {
  constructor(path: string) {
    super(`${path}: output exists (pass --overwrite to replace it)`);
    this.name = "OutputCollisionError";
  }
}

/** Raised when the trace set cannot be plotted as requested. */
export class PlotDataError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "PlotDataError";
  }
}

export interface PlotOptions {
  logY?: boolean;
  overwrite?: boolean;
}

// Classic 10-color categorical palette; cycles past ten series.
export const PALETTE: readonly Color[] = [
  [31, 119, 180],
  [255, 127, 14],
  [44, 160, 44],
  [214, 39, 40],
  [148, 103, 189],
  [140, 86, 75],
  [227, 119, 194],
  [127, 127, 127],
  [188, 189, 34],
  [23, 190, 207],
];

export const WIDTH = 960;
export const HEIGHT = 600;
const MARGIN = { left: 80, right: 24, top: 24, bottom: 56 };

interface Extent {
  xLo: number;
  xHi: number;
  yLo: number;
  yHi: number;
}

function computeExtent(series: TraceSeries[], logY: boolean): Extent {
  let xLo = Infinity;
  let xHi = -Infinity;
  let yLo = Infinity;
  let yHi = -Infinity;
  for (const s of series) {
    for (const p of s.points) {
      xLo = Math.min(xLo, p.round);
      xHi = Math.max(xHi, p.round);
      if (logY && p.cumLoss <= 0) {
        continue;
      }
      yLo = Math.min(yLo, p.cumLoss);
      yHi = Math.max(yHi, p.cumLoss);
    }
  }
  if (!Number.isFinite(yLo)) {
    throw new PlotDataError(
      "no positive cumulative losses: nothing to draw on a log-y axis",
    );
  }
  if (!logY) {
    yLo = Math.min(0, yLo);
  }
  return { xLo, xHi, yLo, yHi };
}

/** Render the chart for an already-validated series set. */
export function renderChart(series: TraceSeries[], options: PlotOptions = {}): Framebuffer {
  if (series.length === 0) {
    throw new PlotDataError("no trace series to plot");
  }
  const logY = options.logY ?? false;
  const { xLo, xHi, yLo, yHi } = computeExtent(series, logY);

  const fb = new Framebuffer(WIDTH, HEIGHT, WHITE);
  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const xScale = linearScale(xLo, xHi, plotW);
  const yScale: Scale = logY
    ? logScale(yLo, yHi, plotH)
    : linearScale(yLo, yHi, plotH);
  const px = (v: number) => MARGIN.left + xScale.toPixel(v);
  const py = (v: number) => MARGIN.top + plotH - yScale.toPixel(v);

  // Gridlines and tick labels.
  for (const tick of xScale.ticks) {
    const x = Math.round(px(tick));
    fb.drawLine(x, MARGIN.top, x, MARGIN.top + plotH, GREY);
    const label = formatTick(tick);
    fb.drawText(x - textWidth(label) / 2, MARGIN.top + plotH + 8, label, DARK_GREY);
  }
  for (const tick of yScale.ticks) {
    const y = Math.round(py(tick));
    fb.drawLine(MARGIN.left, y, MARGIN.left + plotW, y, GREY);
    const label = formatTick(tick);
    fb.drawText(MARGIN.left - textWidth(label) - 8, y - 3, label, DARK_GREY);
  }

  // Frame on top of the grid.
  fb.drawLine(MARGIN.left, MARGIN.top, MARGIN.left + plotW, MARGIN.top, BLACK);
  fb.drawLine(MARGIN.left, MARGIN.top + plotH, MARGIN.left + plotW, MARGIN.top + plotH, BLACK);
  fb.drawLine(MARGIN.left, MARGIN.top, MARGIN.left, MARGIN.top + plotH, BLACK);
  fb.drawLine(MARGIN.left + plotW, MARGIN.top, MARGIN.left + plotW, MARGIN.top + plotH, BLACK);

  // Axis titles.
  const xTitle = "round";
  fb.drawText(MARGIN.left + plotW / 2 - textWidth(xTitle), MARGIN.top + plotH + 28, xTitle, BLACK, 2);
  const yTitle = logY ? "cumulative loss (log)" : "cumulative loss";
  fb.drawTextVertical(10, MARGIN.top + plotH / 2 + textWidth(yTitle) / 2, yTitle, BLACK, 1);

  // Series, colored by sorted-config-id rank.
  series.forEach((s, rank) => {
    const color = PALETTE[rank % PALETTE.length]!;
    let segment: Array<[number, number]> = [];
    const flush = () => {
      if (segment.length > 0) {
        fb.drawPolyline(segment, color, 2);
        segment = [];
      }
    };
    for (const p of s.points) {
      if (!yScale.representable(p.cumLoss)) {
        flush();
        continue;
      }
      segment.push([px(p.round), py(p.cumLoss)]);
    }
    flush();
  });

  // Legend: swatch + config id, top-left inside the frame.
  const legendX = MARGIN.left + 12;
  let legendY = MARGIN.top + 12;
  series.forEach((s, rank) => {
    const color = PALETTE[rank % PALETTE.length]!;
    fb.fillRect(legendX, legendY + 2, 18, 3, color);
    fb.drawText(legendX + 24, legendY, s.configId, BLACK);
    legendY += 14;
  });

  return fb;
}

export function encodePng(fb: Framebuffer): Buffer {
  const png = new PNG({ width: fb.width, height: fb.height });
  fb.data.forEach((value, i) => {
    png.data[i] = value;
  });
  return PNG.sync.write(png);
}

/**
 * Read `tracePaths`, render the cumulative-loss chart, and write it to
 * `outputPath`.  Returns the validated series (already sorted by
 * config_id) for reporting.
 */
export function plotLosses(
  tracePaths: string[],
  outputPath: string,
  options: PlotOptions = {},
): TraceSeries[] {
  if (tracePaths.length === 0) {
    throw new PlotDataError("no trace files to plot");
  }
  if (existsSync(outputPath) && !options.overwrite) {
    throw new OutputCollisionError(outputPath);
  }
  const series = readTraceSet(tracePaths);
  const fb = renderChart(series, options);
  writeFileSync(outputPath, encodePng(fb));
  return series;
}
