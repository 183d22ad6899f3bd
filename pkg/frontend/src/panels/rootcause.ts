/** Root-cause panel: pick a target metric and candidate causes, submit,
 * and render the server's magnitude-sorted effects with each probe value.
 * Untestable candidates stay in the list, greyed, with the server's
 * reason. Clicking a testable candidate feeds it into the ranking panel —
 * the "why did this happen" → "what should we do" loop. */

import type { AppContext } from "../app.js";
import { clear, el, formatNumber } from "../dom.js";
import type { RootCauseEntry } from "../types.js";

export interface Panel {
  element: HTMLElement;
  render(): void;
}

export function buildRootCausePanel(ctx: AppContext): Panel {
  const targetSelect = el("select", { "data-testid": "target-select" });
  targetSelect.addEventListener("change", () => {
    ctx.actions.setRootCauseTarget(targetSelect.value);
  });

  const candidateBox = el("div", { "data-testid": "cause-candidates", class: "checkbox-list" });

  const submitBtn = el("button", { "data-testid": "rootcause-submit" }, ["Probe root causes"]);
  submitBtn.addEventListener("click", () => {
    void ctx.actions.submitRootCause();
  });

  const hint = el("div", { "data-testid": "rootcause-hint", class: "hint" });
  const errorBox = el("div", { "data-testid": "rootcause-error", class: "error", hidden: "" });
  const results = el("div", { "data-testid": "rootcause-results" });

  const element = el("section", { "data-testid": "rootcause-panel", class: "panel" }, [
    el("h2", {}, ["Root-cause probes"]),
    el("div", { class: "form-row" }, [el("label", {}, ["target ", targetSelect])]),
    candidateBox,
    el("div", { class: "form-row" }, [submitBtn]),
    hint,
    errorBox,
    results,
  ]);

  function causeRow(entry: RootCauseEntry): HTMLElement {
    if (entry.untestable) {
      return el(
        "div",
        {
          "data-testid": "cause-row",
          "data-candidate": entry.candidate,
          class: "cause-row untestable",
        },
        [
          el("strong", {}, [entry.candidate]),
          el("span", { class: "muted" }, [` untestable — ${entry.reason ?? ""}`]),
        ],
      );
    }
    const row = el(
      "div",
      {
        "data-testid": "cause-row",
        "data-candidate": entry.candidate,
        class: "cause-row",
        role: "button",
        title: "Send to intervention ranking",
      },
      [
        el("strong", {}, [entry.candidate]),
        el("span", {}, [
          ` probe value ${entry.probe_value === null ? "—" : formatNumber(entry.probe_value)}`,
        ]),
        el("span", { class: "effect" }, [
          ` effect ${entry.effect === null ? "—" : formatNumber(entry.effect)}`,
        ]),
      ],
    );
    row.addEventListener("click", () => {
      ctx.actions.prefillRankingFrom(entry.candidate);
    });
    return row;
  }

  function rebuildControls(): void {
    const columns = ctx.state.dataset?.columns ?? [];
    const target = ctx.state.rootCauseTarget;

    clear(targetSelect);
    for (const column of columns) {
      targetSelect.append(el("option", { value: column.name }, [column.name]));
    }
    if (target !== null) targetSelect.value = target;

    clear(candidateBox);
    for (const column of columns) {
      if (column.name === target) continue;
      const checkbox = el("input", {
        type: "checkbox",
        "data-testid": "cause-checkbox",
        "data-column": column.name,
      });
      checkbox.checked = ctx.state.rootCauseCandidates.includes(column.name);
      checkbox.addEventListener("change", () => {
        ctx.actions.toggleRootCauseCandidate(column.name, checkbox.checked);
      });
      candidateBox.append(el("label", { class: "checkbox-item" }, [checkbox, column.name]));
    }
  }

  function render(): void {
    rebuildControls();

    const reason = ctx.actions.rootCauseBlockedReason();
    submitBtn.disabled = reason !== null;
    hint.textContent = reason ?? "";

    const error = ctx.errors.rootcause;
    errorBox.textContent = error ?? "";
    if (error === null) {
      errorBox.setAttribute("hidden", "");
    } else {
      errorBox.removeAttribute("hidden");
    }

    clear(results);
    const response = ctx.state.lastRootCause;
    if (response === null) return;
    results.append(
      el("div", { class: "summary-line" }, [`target ${response.target}, strongest first`]),
    );
    for (const entry of response.results) {
      results.append(causeRow(entry));
    }
  }

  return { element, render };
}
