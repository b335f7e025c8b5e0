import { statSync } from "fs";

import { loadPage, ScriptTimeoutError } from "./page.js";
import { errorResponse, okResponse, type RenderRequest, type RenderResponse } from "./protocol.js";
import { Surface, writePng } from "./surface.js";

/**
 * One full render: load the page, composite every canvas over the body
 * background at the origin, and write a viewport-sized PNG.  Page-level
 * problems become status=error responses, never process failures.
 */
export function renderPage(request: RenderRequest): RenderResponse {
  let isFile = false;
  try {
    isFile = statSync(request.page).isFile();
  } catch {
    isFile = false;
  }
  if (!isFile) {
    return errorResponse(`page not found: ${request.page}`);
  }

  let page;
  try {
    page = loadPage(request.page, request.viewport, request.settleMs);
  } catch (err) {
    if (err instanceof ScriptTimeoutError) {
      return errorResponse(`page load timeout: ${err.message}`);
    }
    return errorResponse(`navigation failure: ${err instanceof Error ? err.message : err}`);
  }

  const frame = new Surface(request.viewport.w, request.viewport.h);
  frame.fill(page.background);
  for (const canvas of page.canvases) {
    frame.blitOver(canvas.surface, 0, 0);
  }

  try {
    writePng(frame, request.out);
  } catch (err) {
    return errorResponse(`cannot write ${request.out}: ${err instanceof Error ? err.message : err}`);
  }
  return okResponse(request.out, page.consoleErrors);
}
