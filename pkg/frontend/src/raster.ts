/**
 * A plain RGBA framebuffer with the handful of drawing primitives the
 * chart needs: filled rectangles, 1-px lines (Bresenham), thickened
 * polylines, and bitmap text.
 */

import { GLYPH_HEIGHT, GLYPH_WIDTH, glyphFor } from "./font.js";

export type Color = readonly [number, number, number];

export const BLACK: Color = [0, 0, 0];
export const WHITE: Color = [255, 255, 255];
export const GREY: Color = [210, 210, 210];
export const DARK_GREY: Color = [90, 90, 90];

export class Framebuffer {
  readonly width: number;
  readonly height: number;
  /** RGBA rows, top to bottom — the layout pngjs serializes directly. */
  readonly data: Uint8Array;

  constructor(width: number, height: number, background: Color = WHITE) {
    if (!Number.isInteger(width) || !Number.isInteger(height) || width <= 0 || height <= 0) {
      throw new Error(`invalid framebuffer size ${width}x${height}`);
    }
    this.width = width;
    this.height = height;
    this.data = new Uint8Array(width * height * 4);
    this.fillRect(0, 0, width, height, background);
  }

  setPixel(x: number, y: number, color: Color): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) {
      return;
    }
    const i = (y * this.width + x) * 4;
    this.data[i] = color[0];
    this.data[i + 1] = color[1];
    this.data[i + 2] = color[2];
    this.data[i + 3] = 255;
  }

  getPixel(x: number, y: number): Color {
    const i = (y * this.width + x) * 4;
    return [this.data[i]!, this.data[i + 1]!, this.data[i + 2]!];
  }

  fillRect(x: number, y: number, w: number, h: number, color: Color): void {
    for (let yy = y; yy < y + h; yy++) {
      for (let xx = x; xx < x + w; xx++) {
        this.setPixel(xx, yy, color);
      }
    }
  }

  drawLine(x0: number, y0: number, x1: number, y1: number, color: Color): void {
    let x = Math.round(x0);
    let y = Math.round(y0);
    const xe = Math.round(x1);
    const ye = Math.round(y1);
    const dx = Math.abs(xe - x);
    const dy = -Math.abs(ye - y);
    const sx = x < xe ? 1 : -1;
    const sy = y < ye ? 1 : -1;
    let err = dx + dy;
    for (;;) {
      this.setPixel(x, y, color);
      if (x === xe && y === ye) {
        break;
      }
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y += sy;
      }
    }
  }

  /** Polyline with a square brush of `thickness` px for visibility. */
  drawPolyline(points: ReadonlyArray<readonly [number, number]>, color: Color, thickness = 2): void {
    const offsets: Array<[number, number]> = [];
    const radius = Math.floor(thickness / 2);
    for (let oy = -radius; oy < thickness - radius; oy++) {
      for (let ox = -radius; ox < thickness - radius; ox++) {
        offsets.push([ox, oy]);
      }
    }
    for (let i = 1; i < points.length; i++) {
      const [ax, ay] = points[i - 1]!;
      const [bx, by] = points[i]!;
      for (const [ox, oy] of offsets) {
        this.drawLine(ax + ox, ay + oy, bx + ox, by + oy, color);
      }
    }
    if (points.length === 1) {
      const [px, py] = points[0]!;
      for (const [ox, oy] of offsets) {
        this.setPixel(Math.round(px) + ox, Math.round(py) + oy, color);
      }
    }
  }

  drawText(x: number, y: number, text: string, color: Color, scale = 1): void {
    let cursor = Math.round(x);
    const top = Math.round(y);
    for (const ch of text) {
      const rows = glyphFor(ch);
      for (let r = 0; r < GLYPH_HEIGHT; r++) {
        const bits = rows[r]!;
        for (let c = 0; c < GLYPH_WIDTH; c++) {
          if ((bits >> (GLYPH_WIDTH - 1 - c)) & 1) {
            this.fillRect(cursor + c * scale, top + r * scale, scale, scale, color);
          }
        }
      }
      cursor += (GLYPH_WIDTH + 1) * scale;
    }
  }

  /** Vertical text read bottom-to-top (for the y-axis title). */
  drawTextVertical(x: number, y: number, text: string, color: Color, scale = 1): void {
    let cursor = Math.round(y);
    const left = Math.round(x);
    for (const ch of text) {
      const rows = glyphFor(ch);
      for (let r = 0; r < GLYPH_HEIGHT; r++) {
        const bits = rows[r]!;
        for (let c = 0; c < GLYPH_WIDTH; c++) {
          if ((bits >> (GLYPH_WIDTH - 1 - c)) & 1) {
            // Rotate 90 degrees counterclockwise: glyph row r becomes
            // framebuffer column r; glyph column c runs up the page.
            this.fillRect(left + r * scale, cursor - c * scale, scale, scale, color);
          }
        }
      }
      cursor -= (GLYPH_WIDTH + 1) * scale;
    }
  }
}
