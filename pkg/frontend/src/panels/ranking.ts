/** Intervention ranking panel: draft candidate interventions, pick an
 * objective, submit, and render the server's ranking — cards appear in
 * exactly the order the response lists them. Flagged candidates keep
 * their place in that order and carry a visible warning badge. */

import type { AppContext } from "../app.js";
import { clear, el, formatNumber } from "../dom.js";
import type { RankEntry } from "../types.js";
import { outcomeColumn } from "../types.js";

export interface Panel {
  element: HTMLElement;
  render(): void;
}

export function buildRankingPanel(ctx: AppContext): Panel {
  const candidateSelect = el("select", { "data-testid": "candidate-select" });
  const t1Input = el("input", {
    "data-testid": "t1-input",
    type: "number",
    step: "any",
    placeholder: "t1 (server default)",
  });
  const t0Input = el("input", {
    "data-testid": "t0-input",
    type: "number",
    step: "any",
    placeholder: "t0 (server default)",
  });
  const addBtn = el("button", { "data-testid": "add-candidate" }, ["Add candidate"]);
  addBtn.addEventListener("click", () => {
    const column = candidateSelect.value;
    if (column === "") return;
    ctx.actions.addCandidate(
      column,
      t1Input.value === "" ? null : Number(t1Input.value),
      t0Input.value === "" ? null : Number(t0Input.value),
    );
    t1Input.value = "";
    t0Input.value = "";
  });

  const objectiveSelect = el("select", { "data-testid": "objective-select" });
  objectiveSelect.append(el("option", { value: "maximize" }, ["maximize"]));
  objectiveSelect.append(el("option", { value: "minimize" }, ["minimize"]));
  objectiveSelect.addEventListener("change", () => {
    void ctx.actions.setObjective(objectiveSelect.value === "minimize" ? "minimize" : "maximize");
  });

  const estimatorSelect = el("select", { "data-testid": "estimator-select" });
  estimatorSelect.append(el("option", { value: "s-learner" }, ["s-learner"]));
  estimatorSelect.append(el("option", { value: "in-context" }, ["in-context"]));
  estimatorSelect.addEventListener("change", () => {
    ctx.actions.setEstimator(estimatorSelect.value === "in-context" ? "in-context" : "s-learner");
  });

  const submitBtn = el("button", { "data-testid": "rank-submit" }, ["Rank interventions"]);
  submitBtn.addEventListener("click", () => {
    void ctx.actions.submitRanking();
  });

  const hint = el("div", { "data-testid": "ranking-hint", class: "hint" });
  const chips = el("div", { "data-testid": "candidate-list", class: "chips" });
  const errorBox = el("div", { "data-testid": "ranking-error", class: "error", hidden: "" });
  const results = el("div", { "data-testid": "ranking-results", class: "cards" });

  const element = el("section", { "data-testid": "ranking-panel", class: "panel" }, [
    el("h2", {}, ["Intervention ranking"]),
    el("div", { class: "form-row" }, [candidateSelect, t1Input, t0Input, addBtn]),
    chips,
    el("div", { class: "form-row" }, [
      el("label", {}, ["objective ", objectiveSelect]),
      el("label", {}, ["estimator ", estimatorSelect]),
      submitBtn,
    ]),
    hint,
    errorBox,
    results,
  ]);

  function intervalBar(entry: RankEntry, low: number, span: number): HTMLElement {
    const bar = el("div", { class: "interval-track" });
    if (entry.lower !== null && entry.upper !== null && span > 0) {
      const left = ((entry.lower - low) / span) * 100;
      const width = ((entry.upper - entry.lower) / span) * 100;
      const fill = el("div", { class: "interval-fill" });
      fill.style.left = `${left}%`;
      fill.style.width = `${Math.max(width, 1)}%`;
      bar.append(fill);
    }
    return bar;
  }

  function card(entry: RankEntry, low: number, span: number): HTMLElement {
    const body: (Node | string)[] = [
      el("div", { class: "card-title" }, [
        el("strong", {}, [entry.candidate]),
        el("span", { class: "contrast" }, [
          ` do(${formatNumber(entry.t0)} → ${formatNumber(entry.t1)})`,
        ]),
      ]),
    ];
    if (entry.flagged) {
      body.push(
        el("div", {}, [
          el("span", { "data-testid": "flag-badge", class: "badge flag" }, ["⚠ flagged"]),
          ` ${entry.reason ?? ""}`,
        ]),
      );
    }
    if (entry.estimate !== null) {
      body.push(el("div", { class: "estimate" }, [formatNumber(entry.estimate)]));
    } else {
      body.push(el("div", { class: "estimate muted" }, ["—"]));
    }
    if (entry.lower !== null && entry.upper !== null) {
      body.push(
        el("div", { class: "interval-text" }, [
          `[${formatNumber(entry.lower)}, ${formatNumber(entry.upper)}]`,
        ]),
      );
      body.push(intervalBar(entry, low, span));
    }
    return el(
      "div",
      {
        "data-testid": "rank-card",
        "data-candidate": entry.candidate,
        class: entry.flagged ? "card flagged" : "card",
      },
      body,
    );
  }

  function rebuildCandidateOptions(): void {
    const current = candidateSelect.value;
    clear(candidateSelect);
    const outcome = outcomeColumn(ctx.state);
    const names = (ctx.state.dataset?.columns ?? [])
      .map((c) => c.name)
      .filter((name) => name !== outcome);
    for (const name of names) {
      candidateSelect.append(el("option", { value: name }, [name]));
    }
    if (names.includes(current)) candidateSelect.value = current;
  }

  function render(): void {
    rebuildCandidateOptions();
    objectiveSelect.value = ctx.state.objective;
    estimatorSelect.value = ctx.state.estimator;

    clear(chips);
    ctx.state.candidates.forEach((draft, index) => {
      const removeBtn = el("button", { "data-testid": "remove-candidate", class: "chip-x" }, ["×"]);
      removeBtn.addEventListener("click", () => {
        ctx.actions.removeCandidate(index);
      });
      const contrast =
        draft.t1 === null && draft.t0 === null
          ? "server defaults"
          : `${draft.t0 === null ? "default" : formatNumber(draft.t0)} → ${
              draft.t1 === null ? "default" : formatNumber(draft.t1)
            }`;
      chips.append(
        el("span", { "data-testid": "candidate-chip", class: "chip", "data-column": draft.column }, [
          `${draft.column} (${contrast}) `,
          removeBtn,
        ]),
      );
    });

    const reason = ctx.actions.rankingBlockedReason();
    submitBtn.disabled = reason !== null;
    hint.textContent = reason ?? "";

    const error = ctx.errors.ranking;
    errorBox.textContent = error ?? "";
    if (error === null) {
      errorBox.setAttribute("hidden", "");
    } else {
      errorBox.removeAttribute("hidden");
    }

    clear(results);
    const ranking = ctx.state.lastRanking;
    if (ranking === null) return;
    const bounds = ranking.ranking
      .flatMap((e) => [e.lower, e.upper])
      .filter((v): v is number => v !== null);
    const low = bounds.length > 0 ? Math.min(...bounds) : 0;
    const span = bounds.length > 0 ? Math.max(...bounds) - low : 0;
    results.append(
      el("div", { class: "summary-line" }, [
        `objective ${ranking.objective} · estimator ${ranking.estimator}`,
      ]),
    );
    for (const entry of ranking.ranking) {
      results.append(card(entry, low, span));
    }
  }

  return { element, render };
}
