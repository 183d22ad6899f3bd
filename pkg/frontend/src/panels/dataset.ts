/** Dataset panel: upload or load a dataset, inspect the inferred column
 * kinds, override kinds and roles, and preview the first rows. Everything
 * shown comes from the latest server responses held in session state. */

import type { AppContext } from "../app.js";
import { clear, el, formatNumber } from "../dom.js";
import type { ColumnInfo } from "../types.js";

const KINDS = ["continuous", "categorical"] as const;
const ROLES = ["covariate", "treatment", "outcome"] as const;

export interface Panel {
  element: HTMLElement;
  render(): void;
}

export function buildDatasetPanel(ctx: AppContext): Panel {
  const csvInput = el("textarea", {
    "data-testid": "csv-input",
    rows: "4",
    placeholder: "Paste CSV (header row plus numeric cells)",
  });
  const fileInput = el("input", { type: "file", accept: ".csv,text/csv" });
  fileInput.addEventListener("change", () => {
    const file = fileInput.files?.[0];
    if (file) {
      void ctx.track(file.text().then((text) => ctx.actions.uploadCsv(text)));
    }
  });
  const uploadBtn = el("button", { "data-testid": "upload-btn" }, ["Upload CSV"]);
  uploadBtn.addEventListener("click", () => {
    void ctx.actions.uploadCsv(csvInput.value);
  });

  const idInput = el("input", {
    "data-testid": "dataset-id-input",
    placeholder: "dataset id",
  });
  const loadBtn = el("button", { "data-testid": "load-btn" }, ["Load"]);
  loadBtn.addEventListener("click", () => {
    void ctx.actions.loadDataset(idInput.value.trim());
  });

  const errorBox = el("div", { "data-testid": "dataset-error", class: "error", hidden: "" });
  const content = el("div", { class: "panel-content" });

  const element = el("section", { "data-testid": "dataset-panel", class: "panel" }, [
    el("h2", {}, ["Dataset"]),
    el("div", { class: "form-row" }, [csvInput]),
    el("div", { class: "form-row" }, [fileInput, uploadBtn, idInput, loadBtn]),
    errorBox,
    content,
  ]);

  function columnRow(column: ColumnInfo): HTMLElement {
    const kindSelect = el("select", { "data-testid": "kind-select" });
    for (const kind of KINDS) {
      kindSelect.append(el("option", { value: kind }, [kind]));
    }
    kindSelect.value = column.kind;
    kindSelect.addEventListener("change", () => {
      void ctx.actions.setKind(column.name, kindSelect.value);
    });

    const roleSelect = el("select", { "data-testid": "role-select" });
    for (const role of ROLES) {
      roleSelect.append(el("option", { value: role }, [role]));
    }
    roleSelect.value = column.role;
    roleSelect.addEventListener("change", () => {
      void ctx.actions.setRole(column.name, roleSelect.value);
    });

    return el("tr", { "data-testid": "column-row", "data-column": column.name }, [
      el("td", {}, [column.name]),
      el("td", {}, [
        el(
          "span",
          { "data-testid": "kind-badge", class: `badge kind-${column.kind}`, "data-kind": column.kind },
          [
            column.categories === null
              ? column.kind
              : `${column.kind} (${formatNumber(column.categories)})`,
          ],
        ),
      ]),
      el("td", {}, [kindSelect]),
      el("td", {}, [roleSelect]),
    ]);
  }

  function render(): void {
    const { dataset, rowsPreview } = ctx.state;
    const error = ctx.errors.dataset;
    errorBox.textContent = error ?? "";
    if (error === null) {
      errorBox.setAttribute("hidden", "");
    } else {
      errorBox.removeAttribute("hidden");
    }

    clear(content);
    if (dataset === null) {
      content.append(
        el("div", { "data-testid": "dataset-empty", class: "empty-state" }, [
          "No dataset loaded. Upload a CSV or load one by id.",
        ]),
      );
      return;
    }

    content.append(
      el("div", { "data-testid": "dataset-summary", class: "summary-line" }, [
        `${dataset.id} — ${dataset.columns.length} columns, ${formatNumber(dataset.n_rows)} rows`,
      ]),
    );

    const columnsBody = el("tbody", {}, dataset.columns.map(columnRow));
    content.append(
      el("table", { class: "columns-table" }, [
        el("thead", {}, [
          el("tr", {}, [
            el("th", {}, ["column"]),
            el("th", {}, ["inferred kind"]),
            el("th", {}, ["kind override"]),
            el("th", {}, ["role"]),
          ]),
        ]),
        columnsBody,
      ]),
    );

    if (rowsPreview !== null) {
      content.append(
        el("div", { "data-testid": "rows-label", class: "summary-line" }, [
          `showing first ${rowsPreview.rows.length} of ${formatNumber(rowsPreview.total_rows)} rows`,
        ]),
      );
      const header = el(
        "tr",
        {},
        rowsPreview.columns.map((name) => el("th", {}, [name])),
      );
      const body = el(
        "tbody",
        {},
        rowsPreview.rows.map((row) =>
          el(
            "tr",
            { "data-testid": "preview-row" },
            row.map((cell) => el("td", {}, [formatNumber(cell)])),
          ),
        ),
      );
      content.append(
        el("div", { class: "scroll-box" }, [
          el("table", { "data-testid": "rows-table", class: "rows-table" }, [
            el("thead", {}, [header]),
            body,
          ]),
        ]),
      );
    }
  }

  return { element, render };
}
