/** Provenance invariant: every number on screen is backed by a logged API
 * response, and the log pane records one entry per exchange. */

import { beforeEach, describe, expect, it } from "vitest";

import { logContainsNumber } from "../src/log.js";
import type { App } from "../src/app.js";
import {
  lineDataset,
  lineRows,
  rankLine,
  rootCauseWithUntestable,
} from "./fixtures.js";
import {
  datasetRoutes,
  mountApp,
  testId,
  testIds,
  withLineDataset,
} from "./helpers.js";

beforeEach(() => {
  document.body.innerHTML = "";
});

const NUMBER_TOKEN = /-?\d+(?:\.\d+)?/g;

function collectTextNodes(node: Node, out: string[]): void {
  if (node.nodeType === Node.TEXT_NODE) {
    out.push(node.nodeValue ?? "");
    return;
  }
  node.childNodes.forEach((child) => collectTextNodes(child, out));
}

/** All numeric tokens rendered in the result panels, tokenized per text
 * node so adjacent cells cannot blur into phantom numbers. The log pane
 * itself is the provenance record, so it is excluded. */
function displayedNumbers(app: App): number[] {
  const values: number[] = [];
  for (const id of ["dataset-panel", "ranking-panel", "rootcause-panel"]) {
    const texts: string[] = [];
    collectTextNodes(testId(app.root, id), texts);
    for (const text of texts) {
      for (const token of text.match(NUMBER_TOKEN) ?? []) {
        values.push(Number(token));
      }
    }
  }
  return values;
}

async function fullSession(): Promise<App> {
  const app = mountApp(
    datasetRoutes(lineDataset, lineRows(), (method, path) => {
      if (method === "POST" && path === "/v1/rank") {
        return { status: 200, body: rankLine };
      }
      if (method === "POST" && path === "/v1/root-cause") {
        return { status: 200, body: rootCauseWithUntestable };
      }
      throw new Error(`unstubbed route: ${method} ${path}`);
    }),
  );
  await withLineDataset(app);
  app.actions.addCandidate("additive", 1, 0);
  app.actions.addCandidate("pressure", 6, 5);
  app.actions.addCandidate("temperature", 31, 30);
  await app.actions.submitRanking();
  app.actions.toggleRootCauseCandidate("additive", true);
  app.actions.toggleRootCauseCandidate("pressure", true);
  app.actions.toggleRootCauseCandidate("temperature", true);
  await app.actions.submitRootCause();
  await app.idle();
  return app;
}

describe("traceability", () => {
  it("backs every displayed number with a logged API response", async () => {
    const app = await fullSession();
    const values = displayedNumbers(app);
    // The session rendered real content, not an empty page.
    expect(values.length).toBeGreaterThan(30);
    for (const value of values) {
      expect(
        logContainsNumber(app.log, value),
        `displayed number ${value} has no logged API response backing it`,
      ).toBe(true);
    }
  });

  it("fails the check for a number no response contains", async () => {
    const app = await fullSession();
    const rogue = document.createElement("div");
    rogue.textContent = "99.125";
    testId(app.root, "ranking-panel").append(rogue);

    const values = displayedNumbers(app);
    expect(values).toContain(99.125);
    expect(logContainsNumber(app.log, 99.125)).toBe(false);
  });

  it("records one log-pane entry per API exchange, with method and status", async () => {
    const app = await fullSession();
    const entries = testIds(app.root, "log-entry");
    // upload + rows + rank + root-cause
    expect(entries).toHaveLength(4);
    expect(app.log.entries.every((e) => e.phase === "done")).toBe(true);
    expect(entries[0]!.textContent).toContain("POST /v1/datasets → 201");
    expect(entries[2]!.textContent).toContain("POST /v1/rank → 200");
    expect(entries[3]!.textContent).toContain("POST /v1/root-cause → 200");
  });
});
