/** Shapes exchanged with the /v1 HTTP API, plus client session state. */

export type ColumnKind = "continuous" | "categorical";
export type ColumnRole = "covariate" | "treatment" | "outcome";
export type EstimatorId = "s-learner" | "in-context";
export type Objective = "maximize" | "minimize";

export interface ColumnInfo {
  name: string;
  kind: ColumnKind;
  categories: number | null;
  role: ColumnRole;
}

export interface DatasetSummary {
  id: string;
  n_rows: number;
  columns: ColumnInfo[];
}

export interface RowsPage {
  columns: string[];
  offset: number;
  total_rows: number;
  rows: number[][];
}

export interface RankEntry {
  candidate: string;
  t1: number;
  t0: number;
  estimate: number | null;
  lower: number | null;
  upper: number | null;
  flagged: boolean;
  reason: string | null;
}

export interface RankResponse {
  objective: Objective;
  estimator: EstimatorId;
  ranking: RankEntry[];
}

export interface RootCauseEntry {
  candidate: string;
  probe_value: number | null;
  effect: number | null;
  abs_effect: number | null;
  untestable: boolean;
  reason: string | null;
}

export interface RootCauseResponse {
  target: string;
  results: RootCauseEntry[];
}

/** A candidate intervention as drafted in the ranking form; null contrast
 * values mean "use the server defaults". */
export interface CandidateDraft {
  column: string;
  t1: number | null;
  t0: number | null;
}

/** Client session: which dataset is active, the drafted query inputs, and
 * the latest server responses. Views render exclusively from the response
 * objects stored here — the client never recomputes estimates. */
export interface SessionState {
  dataset: DatasetSummary | null;
  rowsPreview: RowsPage | null;
  candidates: CandidateDraft[];
  objective: Objective;
  estimator: EstimatorId;
  rootCauseTarget: string | null;
  rootCauseCandidates: string[];
  lastRanking: RankResponse | null;
  lastRootCause: RootCauseResponse | null;
}

export function initialState(): SessionState {
  return {
    dataset: null,
    rowsPreview: null,
    candidates: [],
    objective: "maximize",
    estimator: "s-learner",
    rootCauseTarget: null,
    rootCauseCandidates: [],
    lastRanking: null,
    lastRootCause: null,
  };
}

/** Install a new active dataset (or none), dropping anything that referred
 * to the previous one: drafted candidates must reference existing columns,
 * and stored results always describe the current dataset. */
export function setDataset(
  state: SessionState,
  summary: DatasetSummary | null,
): void {
  const previousId = state.dataset?.id ?? null;
  state.dataset = summary;
  if (summary === null || summary.id !== previousId) {
    state.rowsPreview = null;
    state.candidates = [];
    state.rootCauseTarget = null;
    state.rootCauseCandidates = [];
    state.lastRanking = null;
    state.lastRootCause = null;
  }
  if (summary !== null) {
    const names = new Set(summary.columns.map((c) => c.name));
    state.candidates = state.candidates.filter((c) => names.has(c.column));
    state.rootCauseCandidates = state.rootCauseCandidates.filter((c) =>
      names.has(c),
    );
    if (state.rootCauseTarget !== null && !names.has(state.rootCauseTarget)) {
      state.rootCauseTarget = null;
    }
  }
}

/** The column currently tagged with the outcome role, if any. */
export function outcomeColumn(state: SessionState): string | null {
  const hit = state.dataset?.columns.find((c) => c.role === "outcome");
  return hit ? hit.name : null;
}
