// Line-delimited JSON over stdio: one request line in, one response line out.
// The parent process serializes calls, so there is never more than one
// request in flight.

export type Viewport = { w: number; h: number };

export type RenderRequest = {
  page: string;
  viewport: Viewport;
  settleMs: number;
  out: string;
};

export type RenderResponse = {
  status: "ok" | "error";
  png: string | null;
  console_errors: string[];
  message: string | null;
};

export function errorResponse(message: string): RenderResponse {
  return { status: "error", png: null, console_errors: [], message };
}

export function okResponse(png: string, consoleErrors: string[]): RenderResponse {
  return { status: "ok", png, console_errors: consoleErrors, message: null };
}

// Defaults when a field is omitted; a present-but-broken field is a bad request.
const DEFAULT_VIEWPORT: Viewport = { w: 1280, h: 720 };
const DEFAULT_SETTLE_MS = 500;

export function parseRequest(raw: string): RenderRequest {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch (err) {
    throw new Error(`bad request: ${err instanceof Error ? err.message : err}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new Error("bad request: not a JSON object");
  }
  const record = doc as Record<string, unknown>;
  if (typeof record.page !== "string" || !record.page) {
    throw new Error("bad request: missing page");
  }
  if (typeof record.out !== "string" || !record.out) {
    throw new Error("bad request: missing out");
  }

  let viewport = DEFAULT_VIEWPORT;
  if (record.viewport !== undefined) {
    const vp = record.viewport as { w?: unknown; h?: unknown };
    if (
      typeof vp !== "object" ||
      vp === null ||
      !Number.isInteger(vp.w) ||
      !Number.isInteger(vp.h) ||
      (vp.w as number) < 1 ||
      (vp.h as number) < 1
    ) {
      throw new Error("bad request: viewport must hold positive integers w and h");
    }
    viewport = { w: vp.w as number, h: vp.h as number };
  }

  let settleMs = DEFAULT_SETTLE_MS;
  if (record.settle_ms !== undefined) {
    if (!Number.isInteger(record.settle_ms) || (record.settle_ms as number) < 0) {
      throw new Error("bad request: settle_ms must be a non-negative integer");
    }
    settleMs = record.settle_ms as number;
  }

  return { page: record.page, viewport, settleMs, out: record.out };
}
