/** Application wiring: session state, panel composition, and the actions
 * panels invoke. Server communication always flows through the logged
 * ApiClient, responses land in session state, and panels re-render from
 * that state — the client never derives effect numbers of its own. */

import { ApiClient, ApiError, type FetchLike } from "./api.js";
import { PanelGate } from "./gate.js";
import { RequestLog } from "./log.js";
import { buildDatasetPanel } from "./panels/dataset.js";
import { buildLogPane } from "./panels/logpane.js";
import { buildRankingPanel } from "./panels/ranking.js";
import { buildRootCausePanel } from "./panels/rootcause.js";
import {
  initialState,
  outcomeColumn,
  setDataset,
  type EstimatorId,
  type Objective,
  type SessionState,
} from "./types.js";

export interface PanelErrors {
  dataset: string | null;
  ranking: string | null;
  rootcause: string | null;
}

export interface AppActions {
  uploadCsv(text: string): Promise<void>;
  loadDataset(id: string): Promise<void>;
  setKind(column: string, kind: string): Promise<void>;
  setRole(column: string, role: string): Promise<void>;
  addCandidate(column: string, t1: number | null, t0: number | null): void;
  removeCandidate(index: number): void;
  setObjective(objective: Objective): Promise<void>;
  setEstimator(estimator: EstimatorId): void;
  submitRanking(): Promise<void>;
  setRootCauseTarget(column: string): void;
  toggleRootCauseCandidate(column: string, on: boolean): void;
  submitRootCause(): Promise<void>;
  prefillRankingFrom(column: string): void;
  rankingBlockedReason(): string | null;
  rootCauseBlockedReason(): string | null;
}

export interface AppContext {
  state: SessionState;
  errors: PanelErrors;
  api: ApiClient;
  actions: AppActions;
  track<T>(promise: Promise<T>): Promise<T>;
}

export interface App extends AppContext {
  root: HTMLElement;
  log: RequestLog;
  renderAll(): void;
  /** Resolves once every action started so far has settled. */
  idle(): Promise<void>;
}

export interface AppOptions {
  fetchFn: FetchLike;
  baseUrl?: string;
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) return err.display();
  if (err instanceof Error) return err.message;
  return String(err);
}

export function createApp(root: HTMLElement, options: AppOptions): App {
  const log = new RequestLog();
  const api = new ApiClient(options.fetchFn, options.baseUrl ?? "", log);
  const state: SessionState = initialState();
  const errors: PanelErrors = { dataset: null, ranking: null, rootcause: null };
  const gates = {
    dataset: new PanelGate(),
    ranking: new PanelGate(),
    rootcause: new PanelGate(),
  };

  const inflight = new Set<Promise<unknown>>();
  function track<T>(promise: Promise<T>): Promise<T> {
    inflight.add(promise);
    void promise.finally(() => inflight.delete(promise));
    return promise;
  }

  async function idle(): Promise<void> {
    while (inflight.size > 0) {
      await Promise.allSettled([...inflight]);
    }
  }

  /** After any dataset summary refresh: keep the root-cause target usable. */
  function defaultRootCauseTarget(): void {
    if (state.dataset === null) return;
    const names = state.dataset.columns.map((c) => c.name);
    if (state.rootCauseTarget === null || !names.includes(state.rootCauseTarget)) {
      state.rootCauseTarget = outcomeColumn(state) ?? names[names.length - 1] ?? null;
    }
  }

  async function doUploadCsv(text: string): Promise<void> {
    const token = gates.dataset.begin();
    errors.dataset = null;
    try {
      const summary = await api.uploadCsv(text);
      if (!gates.dataset.isCurrent(token)) return;
      setDataset(state, summary);
      defaultRootCauseTarget();
      const rows = await api.getRows(summary.id);
      if (!gates.dataset.isCurrent(token)) return;
      state.rowsPreview = rows;
    } catch (err) {
      if (!gates.dataset.isCurrent(token)) return;
      errors.dataset = describeError(err);
    } finally {
      if (gates.dataset.isCurrent(token)) renderAll();
    }
  }

  async function doLoadDataset(id: string): Promise<void> {
    const token = gates.dataset.begin();
    errors.dataset = null;
    try {
      const summary = await api.getDataset(id);
      if (!gates.dataset.isCurrent(token)) return;
      setDataset(state, summary);
      defaultRootCauseTarget();
      const rows = await api.getRows(summary.id);
      if (!gates.dataset.isCurrent(token)) return;
      state.rowsPreview = rows;
    } catch (err) {
      if (!gates.dataset.isCurrent(token)) return;
      setDataset(state, null);
      errors.dataset = describeError(err);
    } finally {
      if (gates.dataset.isCurrent(token)) renderAll();
    }
  }

  async function doPatchColumns(patch: {
    kinds?: Record<string, string>;
    roles?: Record<string, string>;
  }): Promise<void> {
    if (state.dataset === null) return;
    const token = gates.dataset.begin();
    errors.dataset = null;
    try {
      const summary = await api.patchColumns(state.dataset.id, patch);
      if (!gates.dataset.isCurrent(token)) return;
      setDataset(state, summary);
      defaultRootCauseTarget();
    } catch (err) {
      if (!gates.dataset.isCurrent(token)) return;
      errors.dataset = describeError(err);
    } finally {
      if (gates.dataset.isCurrent(token)) renderAll();
    }
  }

  async function doSubmitRanking(): Promise<void> {
    const dataset = state.dataset;
    const outcome = outcomeColumn(state);
    if (dataset === null || outcome === null || state.candidates.length === 0) {
      renderAll();
      return;
    }
    const token = gates.ranking.begin();
    errors.ranking = null;
    try {
      const response = await api.rank({
        dataset_id: dataset.id,
        outcome_column: outcome,
        candidates: state.candidates,
        objective: state.objective,
        estimator: state.estimator,
      });
      if (!gates.ranking.isCurrent(token)) return;
      state.lastRanking = response;
    } catch (err) {
      if (!gates.ranking.isCurrent(token)) return;
      errors.ranking = describeError(err);
    } finally {
      if (gates.ranking.isCurrent(token)) renderAll();
    }
  }

  async function doSubmitRootCause(): Promise<void> {
    const dataset = state.dataset;
    const target = state.rootCauseTarget;
    if (dataset === null || target === null || state.rootCauseCandidates.length === 0) {
      renderAll();
      return;
    }
    const token = gates.rootcause.begin();
    errors.rootcause = null;
    try {
      const response = await api.rootCause({
        dataset_id: dataset.id,
        target_column: target,
        candidates: state.rootCauseCandidates,
        estimator: state.estimator,
      });
      if (!gates.rootcause.isCurrent(token)) return;
      state.lastRootCause = response;
    } catch (err) {
      if (!gates.rootcause.isCurrent(token)) return;
      errors.rootcause = describeError(err);
    } finally {
      if (gates.rootcause.isCurrent(token)) renderAll();
    }
  }

  const actions: AppActions = {
    uploadCsv: (text) => track(doUploadCsv(text)),
    loadDataset: (id) => track(doLoadDataset(id)),
    setKind: (column, kind) => track(doPatchColumns({ kinds: { [column]: kind } })),
    setRole: (column, role) => track(doPatchColumns({ roles: { [column]: role } })),

    addCandidate(column, t1, t0) {
      if (state.candidates.some((c) => c.column === column)) return;
      state.candidates.push({ column, t1, t0 });
      renderAll();
    },

    removeCandidate(index) {
      state.candidates.splice(index, 1);
      renderAll();
    },

    setObjective: (objective) =>
      track(
        (async () => {
          state.objective = objective;
          // A toggle after a submitted ranking re-queries under the new
          // objective; before any submit it only updates the form.
          if (state.lastRanking !== null && actions.rankingBlockedReason() === null) {
            await doSubmitRanking();
          } else {
            renderAll();
          }
        })(),
      ),

    setEstimator(estimator) {
      state.estimator = estimator;
      renderAll();
    },

    submitRanking: () => track(doSubmitRanking()),

    setRootCauseTarget(column) {
      state.rootCauseTarget = column;
      state.rootCauseCandidates = state.rootCauseCandidates.filter((c) => c !== column);
      renderAll();
    },

    toggleRootCauseCandidate(column, on) {
      const present = state.rootCauseCandidates.includes(column);
      if (on && !present) state.rootCauseCandidates.push(column);
      if (!on && present) {
        state.rootCauseCandidates = state.rootCauseCandidates.filter((c) => c !== column);
      }
      renderAll();
    },

    submitRootCause: () => track(doSubmitRootCause()),

    prefillRankingFrom(column) {
      if (column === outcomeColumn(state)) return;
      if (!state.candidates.some((c) => c.column === column)) {
        state.candidates.push({ column, t1: null, t0: null });
      }
      renderAll();
    },

    rankingBlockedReason() {
      if (state.dataset === null) return "load a dataset first";
      if (outcomeColumn(state) === null) return "assign an outcome role to a column first";
      if (state.candidates.length === 0) return "add at least one candidate intervention";
      return null;
    },

    rootCauseBlockedReason() {
      if (state.dataset === null) return "load a dataset first";
      if (state.rootCauseTarget === null) return "pick a target column";
      if (state.rootCauseCandidates.length === 0) return "pick at least one candidate cause";
      return null;
    },
  };

  const ctx: AppContext = { state, errors, api, actions, track };

  const datasetPanel = buildDatasetPanel(ctx);
  const rankingPanel = buildRankingPanel(ctx);
  const rootCausePanel = buildRootCausePanel(ctx);
  const logPane = buildLogPane(ctx);

  function renderAll(): void {
    datasetPanel.render();
    rankingPanel.render();
    rootCausePanel.render();
    logPane.render();
  }

  log.onChange(() => logPane.render());

  root.append(
    datasetPanel.element,
    rankingPanel.element,
    rootCausePanel.element,
    logPane.element,
  );
  renderAll();

  return { ...ctx, root, log, renderAll, idle };
}
