import { readFileSync } from "fs";
import * as path from "path";
import * as vm from "vm";

import { CanvasElement } from "./canvas.js";
import { VirtualClock } from "./clock.js";
import { parseColor, type Rgba } from "./color.js";
import type { Viewport } from "./protocol.js";

export type LoadedPage = {
  canvases: CanvasElement[];
  background: Rgba;
  consoleErrors: string[];
};

/** A page script ran past its execution budget; maps to a load timeout upstream. */
export class ScriptTimeoutError extends Error {}

const CANVAS_RE = /<canvas\b([^>]*?)\/?>/gi;
const STYLE_RE = /<style[^>]*>([\s\S]*?)<\/style>/gi;
const SCRIPT_RE = /<script\b([^>]*)>([\s\S]*?)<\/script>/gi;
const ATTR_RE = /([a-zA-Z-]+)\s*=\s*"([^"]*)"/g;
const BODY_RULE_RE = /(?:^|[}\s])body\s*\{([^}]*)\}/gi;

const WHITE: Rgba = [255, 255, 255, 255];
const SCRIPT_BUDGET_MS = 2000;
const FIXED_EPOCH_MS = 1_700_000_000_000;

function attrsOf(tag: string): Record<string, string> {
  const attrs: Record<string, string> = {};
  for (const match of tag.matchAll(ATTR_RE)) {
    attrs[match[1].toLowerCase()] = match[2];
  }
  return attrs;
}

/** Last body background/background-color rule across all style blocks wins. */
export function bodyBackground(html: string): Rgba {
  let background = WHITE;
  for (const style of html.matchAll(STYLE_RE)) {
    for (const rule of style[1].matchAll(BODY_RULE_RE)) {
      for (const decl of rule[1].split(";")) {
        const colon = decl.indexOf(":");
        if (colon < 0) continue;
        const property = decl.slice(0, colon).trim().toLowerCase();
        if (property !== "background" && property !== "background-color") continue;
        const color = parseColor(decl.slice(colon + 1));
        if (color) {
          background = color;
        }
      }
    }
  }
  return background;
}

class MiniDocument {
  readonly body = { style: {} as Record<string, string> };

  constructor(
    private readonly byId: Map<string, CanvasElement>,
    private readonly canvases: CanvasElement[],
  ) {}

  getElementById(id: string): CanvasElement | null {
    return this.byId.get(id) ?? null;
  }

  querySelector(selector: string): CanvasElement | null {
    if (selector.startsWith("#")) {
      return this.getElementById(selector.slice(1));
    }
    if (selector.toLowerCase() === "canvas") {
      return this.canvases[0] ?? null;
    }
    return null;
  }
}

// mulberry32; a fixed seed keeps Math.random deterministic but non-constant
function seededRandom(seed: number): () => number {
  let state = seed | 0;
  return () => {
    state = (state + 0x6d2b79f5) | 0;
    let t = Math.imul(state ^ (state >>> 15), 1 | state);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function makeSandbox(
  document: MiniDocument,
  clock: VirtualClock,
  viewport: Viewport,
  errors: string[],
): vm.Context {
  class FixedDate extends Date {
    constructor(...args: unknown[]) {
      if (args.length === 0) {
        super(FIXED_EPOCH_MS + clock.now);
      } else {
        super(...(args as [number]));
      }
    }

    static now(): number {
      return FIXED_EPOCH_MS + clock.now;
    }
  }

  const sandbox: Record<string, unknown> = {
    document,
    console: {
      log: () => {},
      warn: () => {},
      error: (...args: unknown[]) => errors.push(args.map(String).join(" ")),
    },
    setTimeout: (fn: () => void, delay?: number) => clock.setTimeout(fn, delay),
    clearTimeout: (id: number) => clock.clearTimeout(id),
    requestAnimationFrame: (fn: (t: number) => void) => clock.requestAnimationFrame(fn),
    cancelAnimationFrame: (id: number) => clock.cancelAnimationFrame(id),
    performance: { now: () => clock.now },
    Date: FixedDate,
    Math: Object.assign(Object.create(Math), { random: seededRandom(0x12345678) }),
    innerWidth: viewport.w,
    innerHeight: viewport.h,
    devicePixelRatio: 1,
    JSON,
  };
  sandbox.window = sandbox;
  sandbox.globalThis = sandbox;
  sandbox.self = sandbox;
  return vm.createContext(sandbox);
}

/**
 * Parse the page, run its scripts under virtual time, and return the drawn
 * canvases.  Script exceptions land in console_errors and rendering carries
 * on; only a blown execution budget aborts the load.
 */
export function loadPage(pagePath: string, viewport: Viewport, settleMs: number): LoadedPage {
  const html = readFileSync(pagePath, "utf-8");
  const errors: string[] = [];

  const canvases: CanvasElement[] = [];
  const byId = new Map<string, CanvasElement>();
  for (const match of html.matchAll(CANVAS_RE)) {
    const attrs = attrsOf(match[1]);
    const canvas = new CanvasElement(
      attrs.id ?? "",
      parseInt(attrs.width ?? "300", 10) || 300,
      parseInt(attrs.height ?? "150", 10) || 150,
    );
    canvases.push(canvas);
    if (canvas.id) {
      byId.set(canvas.id, canvas);
    }
  }

  const clock = new VirtualClock();
  const document = new MiniDocument(byId, canvases);
  const context = makeSandbox(document, clock, viewport, errors);

  for (const match of html.matchAll(SCRIPT_RE)) {
    const attrs = attrsOf(match[1]);
    let code = match[2];
    let filename = "<inline>";
    if (attrs.src) {
      if (attrs.src.startsWith("http://") || attrs.src.startsWith("https://") || attrs.src.startsWith("//")) {
        continue; // remote scripts never load; the render must be offline
      }
      const target = path.resolve(path.dirname(pagePath), attrs.src);
      try {
        code = readFileSync(target, "utf-8");
      } catch {
        errors.push(`failed to load script: ${attrs.src}`);
        continue;
      }
      filename = attrs.src;
    }
    try {
      vm.runInContext(code, context, { filename, timeout: SCRIPT_BUDGET_MS });
    } catch (err) {
      // the vm timeout error comes from another realm, so check its code
      if ((err as { code?: string })?.code === "ERR_SCRIPT_EXECUTION_TIMEOUT") {
        throw new ScriptTimeoutError(`${filename}: script execution timed out`);
      }
      errors.push(`uncaught ${String(err)}`);
    }
  }

  clock.advanceTo(settleMs, (err) => errors.push(`uncaught ${String(err)}`));

  return { canvases, background: bodyBackground(html), consoleErrors: errors };
}
