/**
 * Axis scales: data-to-pixel mapping, "nice" tick selection on the
 * 1-2-5 progression for linear axes and decades for log axes, and
 * compact tick-label formatting.
 */

export interface Scale {
  /** Map a data value to a pixel offset in [0, span]. */
  toPixel(value: number): number;
  ticks: number[];
  /** Values outside the representable domain (log of <= 0). */
  representable(value: number): boolean;
}

/** Round-up / round-down to a 1-2-5 "nice" step. */
export function niceStep(rawStep: number): number {
  const magnitude = 10 ** Math.floor(Math.log10(rawStep));
  const residual = rawStep / magnitude;
  if (residual <= 1) {
    return magnitude;
  }
  if (residual <= 2) {
    return 2 * magnitude;
  }
  if (residual <= 5) {
    return 5 * magnitude;
  }
  return 10 * magnitude;
}

/** About `count` ticks covering [lo, hi] on nice boundaries. */
export function niceTicks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) {
    // Degenerate extent: a single tick at the value keeps labels honest.
    return [lo];
  }
  const step = niceStep((hi - lo) / Math.max(1, count));
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  // Guard against float drift at the upper edge.
  for (let v = first; v <= hi + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

export function linearScale(lo: number, hi: number, span: number): Scale {
  const extent = hi > lo ? hi - lo : 1;
  return {
    toPixel: (value: number) => ((value - lo) / extent) * span,
    ticks: niceTicks(lo, hi),
    representable: () => true,
  };
}

/**
 * Log10 scale over positive values.  Ticks sit on decades when the data
 * spans more than one, otherwise on nice mantissa boundaries.
 */
export function logScale(lo: number, hi: number, span: number): Scale {
  if (!(lo > 0) || !(hi > 0)) {
    throw new Error("log scale needs positive bounds");
  }
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  const extent = lhi > llo ? lhi - llo : 1;
  let ticks: number[];
  if (lhi - llo >= 1) {
    ticks = [];
    for (let k = Math.ceil(llo - 1e-9); k <= lhi + 1e-9; k++) {
      ticks.push(10 ** k);
    }
  } else {
    ticks = niceTicks(lo, hi).filter((v) => v > 0);
  }
  return {
    toPixel: (value: number) => ((Math.log10(value) - llo) / extent) * span,
    ticks,
    representable: (value: number) => value > 0,
  };
}

/** Compact label: integers plain, e-notation for extreme magnitudes. */
export function formatTick(value: number): string {
  if (value === 0) {
    return "0";
  }
  const magnitude = Math.abs(value);
  if (magnitude >= 1e6 || magnitude < 1e-4) {
    return value.toExponential(1).replace("e+", "e").replace(/e(-?)0*(\d)/, "e$1$2");
  }
  if (Number.isInteger(value)) {
    return value.toString();
  }
  // Trim trailing zeros from a fixed representation.
  return parseFloat(value.toPrecision(6)).toString();
}
