/** Request/response log pane: one row per API exchange, newest last.
 * This is the provenance surface — every number the other panels show
 * must be backed by a completed entry here. */

import type { AppContext } from "../app.js";
import { clear, el } from "../dom.js";
import type { LogEntry } from "../log.js";

export interface Panel {
  element: HTMLElement;
  render(): void;
}

function preview(value: unknown): string {
  if (value === null || value === undefined) return "";
  const text = typeof value === "string" ? value : JSON.stringify(value);
  return text.length > 160 ? `${text.slice(0, 160)}…` : text;
}

export function buildLogPane(ctx: AppContext): Panel {
  const list = el("div", { class: "log-list" });
  const element = el("section", { "data-testid": "log-pane", class: "panel log-pane" }, [
    el("h2", {}, ["Request log"]),
    list,
  ]);

  function row(entry: LogEntry): HTMLElement {
    const status =
      entry.phase === "pending" ? "…" : entry.phase === "failed" ? `✗ ${entry.error ?? ""}` : String(entry.status);
    return el(
      "div",
      { "data-testid": "log-entry", class: `log-entry ${entry.phase}`, "data-seq": String(entry.seq) },
      [
        el("div", { class: "log-head" }, [`#${entry.seq} ${entry.method} ${entry.path} → ${status}`]),
        el("div", { class: "log-body" }, [
          entry.requestBody === null ? "" : `req ${preview(entry.requestBody)}`,
        ]),
        el("div", { class: "log-body" }, [
          entry.responseBody === null ? "" : `res ${preview(entry.responseBody)}`,
        ]),
      ],
    );
  }

  function render(): void {
    clear(list);
    for (const entry of ctx.api.log.entries) {
      list.append(row(entry));
    }
  }

  return { element, render };
}
