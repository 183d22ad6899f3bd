/** Test scaffolding: mount the app against a stubbed fetch. */

import { createApp, type App } from "../src/app.js";
import type { FetchLike } from "../src/api.js";
import { lineDataset, lineRows } from "./fixtures.js";
import type { DatasetSummary, RowsPage } from "../src/types.js";

export interface StubReply {
  status: number;
  body: unknown;
}

export type RouteHandler = (
  method: string,
  path: string,
  body: string | null,
) => StubReply | Promise<StubReply>;

/** A fetch whose behavior is a plain routing function. */
export function stubFetch(handler: RouteHandler): FetchLike {
  return async (url, init) => {
    const method = init?.method ?? "GET";
    const body = typeof init?.body === "string" ? init.body : null;
    const reply = await handler(method, url, body);
    return new Response(JSON.stringify(reply.body), {
      status: reply.status,
      headers: { "Content-Type": "application/json" },
    });
  };
}

export function mountApp(handler: RouteHandler): App {
  const container = document.createElement("div");
  document.body.append(container);
  return createApp(container, { fetchFn: stubFetch(handler) });
}

/** Routing for the common happy path: upload yields `dataset`, row pages
 * come from `rows`, and `extra` handles everything else. */
export function datasetRoutes(
  dataset: DatasetSummary = lineDataset,
  rows: RowsPage = lineRows(),
  extra?: RouteHandler,
): RouteHandler {
  return (method, path, body) => {
    if (method === "POST" && path === "/v1/datasets") {
      return { status: 201, body: dataset };
    }
    if (method === "GET" && path.startsWith(`/v1/datasets/${dataset.id}/rows`)) {
      return { status: 200, body: rows };
    }
    if (method === "GET" && path === `/v1/datasets/${dataset.id}`) {
      return { status: 200, body: dataset };
    }
    if (extra) {
      return extra(method, path, body);
    }
    throw new Error(`unstubbed route: ${method} ${path}`);
  };
}

export function testIds(root: ParentNode, testId: string): HTMLElement[] {
  return [...root.querySelectorAll<HTMLElement>(`[data-testid="${testId}"]`)];
}

export function testId(root: ParentNode, id: string): HTMLElement {
  const hits = testIds(root, id);
  if (hits.length !== 1) {
    throw new Error(`expected exactly one [data-testid="${id}"], found ${hits.length}`);
  }
  return hits[0]!;
}

/** Upload the line-dataset fixture and wait for the panels to settle. */
export async function withLineDataset(app: App, csv = "additive,pressure,temperature,quality\n1,5,30,8\n"): Promise<void> {
  const input = testId(app.root, "csv-input") as HTMLTextAreaElement;
  input.value = csv;
  testId(app.root, "upload-btn").click();
  await app.idle();
}

/** A promise with its resolver exposed, for staleness scenarios. */
export function deferred<T>(): { promise: Promise<T>; resolve: (v: T) => void } {
  let resolve!: (v: T) => void;
  const promise = new Promise<T>((r) => {
    resolve = r;
  });
  return { promise, resolve };
}
