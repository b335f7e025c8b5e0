import { mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import * as path from "path";
import { PNG } from "pngjs";

export function scratchDir(prefix: string): string {
  return mkdtempSync(path.join(tmpdir(), prefix));
}

export type ScenarioOptions = {
  background?: string;
  width?: number;
  height?: number;
  script?: string;
  scriptSrc?: string;
};

/** Write a minimal host page (plus optional external script) into dir. */
export function makeScenario(dir: string, options: ScenarioOptions = {}): string {
  const { background = "#ffffff", width = 64, height = 48 } = options;
  let scriptTag = "";
  if (options.scriptSrc !== undefined) {
    scriptTag = `<script src="${options.scriptSrc}"></script>`;
  } else if (options.script !== undefined) {
    writeFileSync(path.join(dir, "draw.js"), options.script);
    scriptTag = '<script src="draw.js"></script>';
  }
  const html = `<!DOCTYPE html>
<html>
<head><style>body { margin: 0; background: ${background}; }</style></head>
<body>
<canvas id="stage" width="${width}" height="${height}"></canvas>
${scriptTag}
</body>
</html>
`;
  const pagePath = path.join(dir, "page.html");
  writeFileSync(pagePath, html);
  return pagePath;
}

export function readPng(file: string): PNG {
  return PNG.sync.read(readFileSync(file));
}

export function pixelAt(png: PNG, x: number, y: number): [number, number, number, number] {
  const i = (y * png.width + x) * 4;
  return [png.data[i], png.data[i + 1], png.data[i + 2], png.data[i + 3]];
}

/** Pixels where any channel differs; throws on shape mismatch. */
export function differingPixels(a: PNG, b: PNG): number {
  if (a.width !== b.width || a.height !== b.height) {
    throw new Error("image dimensions differ");
  }
  let count = 0;
  for (let p = 0; p < a.width * a.height; p++) {
    const i = p * 4;
    if (
      a.data[i] !== b.data[i] ||
      a.data[i + 1] !== b.data[i + 1] ||
      a.data[i + 2] !== b.data[i + 2] ||
      a.data[i + 3] !== b.data[i + 3]
    ) {
      count++;
    }
  }
  return count;
}
