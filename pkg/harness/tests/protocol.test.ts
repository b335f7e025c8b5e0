import { spawn } from "child_process";
import * as path from "path";
import { fileURLToPath } from "url";
import { expect, test } from "vitest";

import { makeScenario, scratchDir } from "./helpers.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
const MAIN = path.join(HERE, "..", "dist", "main.js");

type Outcome = { lines: string[]; code: number | null };

function runHarness(input: string): Promise<Outcome> {
  return new Promise((resolve, reject) => {
    const child = spawn("node", [MAIN], { stdio: ["pipe", "pipe", "pipe"] });
    let stdout = "";
    let stderr = "";
    child.stdout.on("data", (chunk) => (stdout += chunk));
    child.stderr.on("data", (chunk) => (stderr += chunk));
    child.on("error", reject);
    child.on("close", (code) => {
      if (stderr) {
        reject(new Error(`harness wrote to stderr: ${stderr}`));
        return;
      }
      resolve({ lines: stdout.split("\n").filter((l) => l.length > 0), code });
    });
    child.stdin.write(input);
    child.stdin.end();
  });
}

test("protocol totality: 50 scripted requests get exactly 50 responses", async () => {
  const dir = scratchDir("hproto-");
  const page = makeScenario(dir, {
    script: `const ctx = document.getElementById("stage").getContext("2d");
ctx.fillStyle = "#8833aa";
ctx.fillRect(2, 2, 30, 20);`,
  });

  const requests: string[] = [];
  for (let i = 0; i < 50; i++) {
    switch (i % 5) {
      case 0:
      case 1:
        requests.push(
          JSON.stringify({
            page,
            viewport: { w: 16, h: 12 },
            settle_ms: 0,
            out: path.join(dir, `shot${i}.png`),
          }),
        );
        break;
      case 2:
        requests.push(
          JSON.stringify({
            page: path.join(dir, "absent.html"),
            viewport: { w: 16, h: 12 },
            settle_ms: 0,
            out: path.join(dir, `shot${i}.png`),
          }),
        );
        break;
      case 3:
        requests.push("this is not json");
        break;
      default:
        requests.push(
          JSON.stringify({ page, viewport: { w: -4, h: 0 }, settle_ms: 0, out: "/dev/null/x" }),
        );
        break;
    }
  }

  const outcome = await runHarness(requests.join("\n") + "\n");
  expect(outcome.code).toBe(0);
  expect(outcome.lines.length).toBe(50);
  const statuses = outcome.lines.map((line) => {
    const doc = JSON.parse(line);
    expect(["ok", "error"]).toContain(doc.status);
    expect(Array.isArray(doc.console_errors)).toBe(true);
    return doc.status;
  });
  expect(statuses.filter((s) => s === "ok").length).toBe(20);
  expect(statuses.filter((s) => s === "error").length).toBe(30);
}, 30000);

test("blank lines are not requests and draw no response", async () => {
  const dir = scratchDir("hblank-");
  const page = makeScenario(dir);
  const request = JSON.stringify({
    page,
    viewport: { w: 8, h: 8 },
    settle_ms: 0,
    out: path.join(dir, "s.png"),
  });
  const outcome = await runHarness(`\n${request}\n\n${request}\n  \n`);
  expect(outcome.code).toBe(0);
  expect(outcome.lines.length).toBe(2);
}, 30000);

test("single request then EOF: one response, clean exit", async () => {
  const dir = scratchDir("honce-");
  const page = makeScenario(dir);
  const request = JSON.stringify({
    page,
    viewport: { w: 8, h: 8 },
    settle_ms: 0,
    out: path.join(dir, "s.png"),
  });
  const outcome = await runHarness(request + "\n");
  expect(outcome.code).toBe(0);
  expect(outcome.lines.length).toBe(1);
  expect(JSON.parse(outcome.lines[0]).status).toBe("ok");
}, 30000);
