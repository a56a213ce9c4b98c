import { describe, expect, it } from "vitest";
import { GLYPH_HEIGHT, glyphFor, hasGlyph, textWidth } from "../src/font.js";
import { BLACK, Framebuffer, WHITE } from "../src/raster.js";
import { formatTick, linearScale, logScale, niceStep, niceTicks } from "../src/scale.js";

describe("font", () => {
  it("covers every character the chart can emit", () => {
    const charset = "abcdefghijklmnopqrstuvwxyz0123456789 .,-+_:/()=";
    for (const ch of charset) {
      expect(hasGlyph(ch), `missing glyph for ${JSON.stringify(ch)}`).toBe(true);
    }
  });

  it("gives every glyph seven rows of five bits", () => {
    for (const ch of "a9_.") {
      const rows = glyphFor(ch);
      expect(rows).toHaveLength(GLYPH_HEIGHT);
      for (const row of rows) {
        expect(row).toBeGreaterThanOrEqual(0);
        expect(row).toBeLessThan(32);
      }
    }
  });

  it("measures text width with inter-glyph gaps", () => {
    expect(textWidth("")).toBe(0);
    expect(textWidth("a")).toBe(5);
    expect(textWidth("ab")).toBe(11);
    expect(textWidth("ab", 2)).toBe(22);
  });
});

describe("framebuffer", () => {
  it("starts as the background color", () => {
    const fb = new Framebuffer(4, 3);
    expect(fb.getPixel(0, 0)).toEqual([255, 255, 255]);
    expect(fb.getPixel(3, 2)).toEqual([255, 255, 255]);
  });

  it("draws line endpoints", () => {
    const fb = new Framebuffer(10, 10);
    fb.drawLine(1, 1, 8, 6, BLACK);
    expect(fb.getPixel(1, 1)).toEqual([0, 0, 0]);
    expect(fb.getPixel(8, 6)).toEqual([0, 0, 0]);
  });

  it("ignores out-of-bounds pixels instead of wrapping", () => {
    const fb = new Framebuffer(4, 4);
    fb.setPixel(-1, 0, BLACK);
    fb.setPixel(0, 99, BLACK);
    for (let y = 0; y < 4; y++) {
      for (let x = 0; x < 4; x++) {
        expect(fb.getPixel(x, y)).toEqual([255, 255, 255]);
      }
    }
  });

  it("renders text as non-background pixels", () => {
    const fb = new Framebuffer(40, 12, WHITE);
    fb.drawText(1, 1, "42", BLACK);
    let dark = 0;
    for (let y = 0; y < 12; y++) {
      for (let x = 0; x < 40; x++) {
        if (fb.getPixel(x, y)[0] === 0) {
          dark += 1;
        }
      }
    }
    expect(dark).toBeGreaterThan(10);
  });

  it("rejects degenerate sizes", () => {
    expect(() => new Framebuffer(0, 5)).toThrowError(/invalid framebuffer size/);
  });
});

describe("scales", () => {
  it("snaps steps to the 1-2-5 progression", () => {
    expect(niceStep(0.9)).toBe(1);
    expect(niceStep(1.1)).toBe(2);
    expect(niceStep(3)).toBe(5);
    expect(niceStep(7)).toBe(10);
    expect(niceStep(0.03)).toBeCloseTo(0.05, 12);
  });

  it("produces ticks inside the extent on nice boundaries", () => {
    const ticks = niceTicks(0, 150, 5);
    expect(ticks[0]).toBe(0);
    expect(ticks[ticks.length - 1]).toBeLessThanOrEqual(150);
    expect(ticks).toContain(50);
  });

  it("maps the linear extent onto the pixel span", () => {
    const s = linearScale(10, 20, 100);
    expect(s.toPixel(10)).toBe(0);
    expect(s.toPixel(20)).toBe(100);
    expect(s.toPixel(15)).toBe(50);
  });

  it("maps decades evenly on the log scale", () => {
    const s = logScale(1, 100, 100);
    expect(s.toPixel(1)).toBeCloseTo(0, 9);
    expect(s.toPixel(10)).toBeCloseTo(50, 9);
    expect(s.toPixel(100)).toBeCloseTo(100, 9);
    expect(s.ticks).toEqual([1, 10, 100]);
    expect(s.representable(0)).toBe(false);
    expect(s.representable(5)).toBe(true);
  });

  it("rejects nonpositive log bounds", () => {
    expect(() => logScale(0, 10, 100)).toThrowError(/positive/);
  });

  it("formats ticks compactly", () => {
    expect(formatTick(0)).toBe("0");
    expect(formatTick(50)).toBe("50");
    expect(formatTick(0.25)).toBe("0.25");
    expect(formatTick(2500000)).toBe("2.5e6");
    expect(formatTick(0.00003)).toBe("3.0e-5");
  });
});
