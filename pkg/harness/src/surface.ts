import { mkdirSync, writeFileSync } from "fs";
import * as path from "path";
import { PNG } from "pngjs";

import type { Rgba } from "./color.js";

/**
 * A plain RGBA pixel buffer with the handful of raster operations the page
 * engine needs.  Coordinates round to whole pixels and rectangles clip to the
 * surface, so identical draw sequences always produce identical bytes.
 */
export class Surface {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8ClampedArray;

  constructor(width: number, height: number) {
    if (width < 1 || height < 1) {
      throw new Error(`surface dimensions must be positive, got ${width}x${height}`);
    }
    this.width = width;
    this.height = height;
    this.data = new Uint8ClampedArray(width * height * 4);
  }

  fill(color: Rgba): void {
    for (let i = 0; i < this.data.length; i += 4) {
      this.data[i] = color[0];
      this.data[i + 1] = color[1];
      this.data[i + 2] = color[2];
      this.data[i + 3] = color[3];
    }
  }

  private clipRect(x: number, y: number, w: number, h: number): [number, number, number, number] {
    const x0 = Math.max(0, Math.round(x));
    const y0 = Math.max(0, Math.round(y));
    const x1 = Math.min(this.width, Math.round(x + w));
    const y1 = Math.min(this.height, Math.round(y + h));
    return [x0, y0, x1, y1];
  }

  fillRect(color: Rgba, x: number, y: number, w: number, h: number): void {
    const [x0, y0, x1, y1] = this.clipRect(x, y, w, h);
    const opaque = color[3] === 255;
    for (let py = y0; py < y1; py++) {
      for (let px = x0; px < x1; px++) {
        const i = (py * this.width + px) * 4;
        if (opaque) {
          this.data[i] = color[0];
          this.data[i + 1] = color[1];
          this.data[i + 2] = color[2];
          this.data[i + 3] = 255;
        } else {
          blendOver(this.data, i, color);
        }
      }
    }
  }

  clearRect(x: number, y: number, w: number, h: number): void {
    const [x0, y0, x1, y1] = this.clipRect(x, y, w, h);
    for (let py = y0; py < y1; py++) {
      for (let px = x0; px < x1; px++) {
        const i = (py * this.width + px) * 4;
        this.data[i] = this.data[i + 1] = this.data[i + 2] = this.data[i + 3] = 0;
      }
    }
  }

  /** Source-over composite of another surface at (dx, dy), clipped. */
  blitOver(src: Surface, dx: number, dy: number): void {
    for (let sy = 0; sy < src.height; sy++) {
      const py = sy + dy;
      if (py < 0 || py >= this.height) continue;
      for (let sx = 0; sx < src.width; sx++) {
        const px = sx + dx;
        if (px < 0 || px >= this.width) continue;
        const si = (sy * src.width + sx) * 4;
        const alpha = src.data[si + 3];
        if (alpha === 0) continue;
        const di = (py * this.width + px) * 4;
        if (alpha === 255) {
          this.data[di] = src.data[si];
          this.data[di + 1] = src.data[si + 1];
          this.data[di + 2] = src.data[si + 2];
          this.data[di + 3] = 255;
        } else {
          blendOver(this.data, di, [src.data[si], src.data[si + 1], src.data[si + 2], alpha]);
        }
      }
    }
  }

  toPngBytes(): Buffer {
    const png = new PNG({ width: this.width, height: this.height });
    png.data = Buffer.from(this.data.buffer.slice(0), 0, this.data.length);
    return PNG.sync.write(png);
  }
}

function blendOver(dst: Uint8ClampedArray, i: number, src: Rgba): void {
  const sa = src[3] / 255;
  const da = dst[i + 3] / 255;
  const outA = sa + da * (1 - sa);
  if (outA === 0) {
    dst[i] = dst[i + 1] = dst[i + 2] = dst[i + 3] = 0;
    return;
  }
  for (let c = 0; c < 3; c++) {
    dst[i + c] = Math.round((src[c] * sa + dst[i + c] * da * (1 - sa)) / outA);
  }
  dst[i + 3] = Math.round(outA * 255);
}

export function writePng(surface: Surface, outPath: string): void {
  mkdirSync(path.dirname(outPath), { recursive: true });
  writeFileSync(outPath, surface.toPngBytes());
}
