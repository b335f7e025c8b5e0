export type Rgba = [number, number, number, number];

const NAMED: Record<string, Rgba> = {
  white: [255, 255, 255, 255],
  black: [0, 0, 0, 255],
  red: [255, 0, 0, 255],
  green: [0, 128, 0, 255],
  lime: [0, 255, 0, 255],
  blue: [0, 0, 255, 255],
  yellow: [255, 255, 0, 255],
  cyan: [0, 255, 255, 255],
  magenta: [255, 0, 255, 255],
  gray: [128, 128, 128, 255],
  grey: [128, 128, 128, 255],
  orange: [255, 165, 0, 255],
  transparent: [0, 0, 0, 0],
};

const HEX_RE = /^#([0-9a-f]{3,8})$/;
const RGB_RE = /^rgba?\(\s*(\d{1,3})\s*,\s*(\d{1,3})\s*,\s*(\d{1,3})\s*(?:,\s*([\d.]+)\s*)?\)$/;

/** CSS color subset: hex, rgb()/rgba(), and a short list of keywords. */
export function parseColor(value: string): Rgba | null {
  const text = value.trim().toLowerCase();
  if (text in NAMED) {
    return [...NAMED[text]] as Rgba;
  }
  const hex = HEX_RE.exec(text);
  if (hex) {
    const digits = hex[1];
    if (digits.length === 3 || digits.length === 4) {
      const parts = digits.split("").map((d) => parseInt(d + d, 16));
      return [parts[0], parts[1], parts[2], parts.length === 4 ? parts[3] : 255];
    }
    if (digits.length === 6 || digits.length === 8) {
      const parts = [];
      for (let i = 0; i < digits.length; i += 2) {
        parts.push(parseInt(digits.slice(i, i + 2), 16));
      }
      return [parts[0], parts[1], parts[2], parts.length === 4 ? parts[3] : 255];
    }
    return null;
  }
  const rgb = RGB_RE.exec(text);
  if (rgb) {
    const channel = (s: string) => Math.min(255, parseInt(s, 10));
    const alpha = rgb[4] === undefined ? 1 : Math.min(1, Math.max(0, parseFloat(rgb[4])));
    return [channel(rgb[1]), channel(rgb[2]), channel(rgb[3]), Math.round(alpha * 255)];
  }
  return null;
}
