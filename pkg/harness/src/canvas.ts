import { parseColor, type Rgba } from "./color.js";
import { Surface } from "./surface.js";

/**
 * The 2D-context subset that rectangle-based reproduction scripts use:
 * solid fills, clears and stroked outlines.  Anything fancier is left
 * undefined on purpose so a script that needs it fails loudly instead of
 * rendering something subtly wrong.
 */
export class Context2D {
  lineWidth = 1;
  private fillColor: Rgba = [0, 0, 0, 255];
  private strokeColor: Rgba = [0, 0, 0, 255];
  private fillRaw = "#000000";
  private strokeRaw = "#000000";

  constructor(private readonly element: CanvasElement) {}

  get canvas(): CanvasElement {
    return this.element;
  }

  get fillStyle(): string {
    return this.fillRaw;
  }

  // invalid values are ignored, as real canvases do
  set fillStyle(value: string) {
    const color = parseColor(String(value));
    if (color) {
      this.fillColor = color;
      this.fillRaw = String(value);
    }
  }

  get strokeStyle(): string {
    return this.strokeRaw;
  }

  set strokeStyle(value: string) {
    const color = parseColor(String(value));
    if (color) {
      this.strokeColor = color;
      this.strokeRaw = String(value);
    }
  }

  fillRect(x: number, y: number, w: number, h: number): void {
    this.element.surface.fillRect(this.fillColor, x, y, w, h);
  }

  clearRect(x: number, y: number, w: number, h: number): void {
    this.element.surface.clearRect(x, y, w, h);
  }

  strokeRect(x: number, y: number, w: number, h: number): void {
    const t = Math.max(1, Math.round(this.lineWidth));
    const s = this.element.surface;
    s.fillRect(this.strokeColor, x, y, w, t);
    s.fillRect(this.strokeColor, x, y + h - t, w, t);
    s.fillRect(this.strokeColor, x, y, t, h);
    s.fillRect(this.strokeColor, x + w - t, y, t, h);
  }
}

export class CanvasElement {
  readonly tagName = "CANVAS";
  surface: Surface;
  private context: Context2D | null = null;

  constructor(
    readonly id: string,
    width = 300,
    height = 150,
  ) {
    this.surface = new Surface(width, height);
  }

  get width(): number {
    return this.surface.width;
  }

  // assigning a dimension resets the pixels, matching canvas semantics
  set width(value: number) {
    this.surface = new Surface(Math.max(1, Math.round(value)), this.surface.height);
  }

  get height(): number {
    return this.surface.height;
  }

  set height(value: number) {
    this.surface = new Surface(this.surface.width, Math.max(1, Math.round(value)));
  }

  getContext(kind: string): Context2D | null {
    if (kind !== "2d") {
      return null;
    }
    if (!this.context) {
      this.context = new Context2D(this);
    }
    return this.context;
  }
}
