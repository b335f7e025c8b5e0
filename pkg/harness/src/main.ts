#!/usr/bin/env node
// Screenshot harness entry point: reads one JSON request per stdin line and
// answers each with exactly one JSON response line.  Page-level failures
// (missing page, crashing script, timeout) come back as status=error
// responses; a nonzero exit is reserved for the harness itself breaking.

import * as readline from "readline";

import { errorResponse, parseRequest, type RenderResponse } from "./protocol.js";
import { renderPage } from "./render.js";

function respond(response: RenderResponse): void {
  process.stdout.write(JSON.stringify(response) + "\n");
}

async function main(): Promise<number> {
  const lines = readline.createInterface({ input: process.stdin, terminal: false });
  for await (const line of lines) {
    if (!line.trim()) {
      continue;
    }
    let response: RenderResponse;
    try {
      response = renderPage(parseRequest(line));
    } catch (err) {
      response = errorResponse(err instanceof Error ? err.message : String(err));
    }
    respond(response);
  }
  return 0;
}

main().then(
  (code) => process.exit(code),
  (err) => {
    console.error(`harness failed: ${err}`);
    process.exit(1);
  },
);
