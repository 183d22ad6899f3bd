/** Stubbed API payloads, shaped exactly like live server responses. */

import type {
  DatasetSummary,
  RankResponse,
  RootCauseResponse,
  RowsPage,
} from "../src/types.js";

export const lineDataset: DatasetSummary = {
  id: "7681293bbeb5b4cf",
  n_rows: 400,
  columns: [
    { name: "additive", kind: "categorical", categories: 2, role: "covariate" },
    { name: "pressure", kind: "continuous", categories: null, role: "covariate" },
    { name: "temperature", kind: "continuous", categories: null, role: "covariate" },
    { name: "quality", kind: "continuous", categories: null, role: "outcome" },
  ],
};

/** Same dataset after PATCH {kinds: {additive: "continuous"}}. */
export const lineDatasetKindOverridden: DatasetSummary = {
  ...lineDataset,
  columns: lineDataset.columns.map((c) =>
    c.name === "additive" ? { ...c, kind: "continuous", categories: null } : c,
  ),
};

export function lineRows(count = 50): RowsPage {
  const rows: number[][] = [];
  for (let i = 0; i < count; i++) {
    rows.push([
      i % 2,
      4 + 0.01 * i,
      28 + 0.02 * i,
      7 + 0.005 * i,
    ]);
  }
  return {
    columns: lineDataset.columns.map((c) => c.name),
    offset: 0,
    total_rows: lineDataset.n_rows,
    rows,
  };
}

/** Fixture 1: three scored candidates, server order additive > pressure >
 * temperature under maximize. */
export const rankLine: RankResponse = {
  objective: "maximize",
  estimator: "s-learner",
  ranking: [
    {
      candidate: "additive",
      t1: 1.0,
      t0: 0.0,
      estimate: 1.9741378023675866,
      lower: 1.9192050051205647,
      upper: 2.116584219274089,
      flagged: false,
      reason: null,
    },
    {
      candidate: "pressure",
      t1: 6.0,
      t0: 5.0,
      estimate: 0.5360390667448752,
      lower: 0.4211897513,
      upper: 0.6633891028,
      flagged: false,
      reason: null,
    },
    {
      candidate: "temperature",
      t1: 31.0,
      t0: 30.0,
      estimate: -0.043882844528338384,
      lower: -0.1274458821,
      upper: 0.0391226754,
      flagged: false,
      reason: null,
    },
  ],
};

/** Fixture 2: two candidates with known opposite effects, so flipping the
 * objective reverses the server ordering. */
export const rankSymmetric: Record<"maximize" | "minimize", RankResponse> = {
  maximize: {
    objective: "maximize",
    estimator: "s-learner",
    ranking: [
      {
        candidate: "speed",
        t1: 1.0,
        t0: 0.0,
        estimate: 1.25,
        lower: null,
        upper: null,
        flagged: false,
        reason: null,
      },
      {
        candidate: "cooling",
        t1: 1.0,
        t0: 0.0,
        estimate: -1.25,
        lower: null,
        upper: null,
        flagged: false,
        reason: null,
      },
    ],
  },
  minimize: {
    objective: "minimize",
    estimator: "s-learner",
    ranking: [
      {
        candidate: "cooling",
        t1: 1.0,
        t0: 0.0,
        estimate: -1.25,
        lower: null,
        upper: null,
        flagged: false,
        reason: null,
      },
      {
        candidate: "speed",
        t1: 1.0,
        t0: 0.0,
        estimate: 1.25,
        lower: null,
        upper: null,
        flagged: false,
        reason: null,
      },
    ],
  },
};

export const symmetricDataset: DatasetSummary = {
  id: "aa00bb11cc22dd33",
  n_rows: 200,
  columns: [
    { name: "speed", kind: "continuous", categories: null, role: "covariate" },
    { name: "cooling", kind: "continuous", categories: null, role: "covariate" },
    { name: "margin", kind: "continuous", categories: null, role: "covariate" },
    { name: "score", kind: "continuous", categories: null, role: "outcome" },
  ],
};

/** Fixture 3: one scored candidate plus one positivity-flagged candidate
 * that the server appends with a reason. */
export const rankFlagged: RankResponse = {
  objective: "maximize",
  estimator: "s-learner",
  ranking: [
    {
      candidate: "speed",
      t1: 3.0,
      t0: 1.0,
      estimate: 2.142235886695475,
      lower: null,
      upper: null,
      flagged: false,
      reason: null,
    },
    {
      candidate: "mode",
      t1: 1.0,
      t0: 1.0,
      estimate: null,
      lower: null,
      upper: null,
      flagged: true,
      reason: "contrast values t1 and t0 must differ",
    },
  ],
};

export const flaggedDataset: DatasetSummary = {
  id: "c47603cc16d486ca",
  n_rows: 10,
  columns: [
    { name: "speed", kind: "continuous", categories: null, role: "covariate" },
    { name: "mode", kind: "categorical", categories: 1, role: "covariate" },
    { name: "yield", kind: "continuous", categories: null, role: "outcome" },
  ],
};

export const rootCauseLine: RootCauseResponse = {
  target: "quality",
  results: [
    {
      candidate: "additive",
      probe_value: 0.0,
      effect: -1.9492323138164551,
      abs_effect: 1.9492323138164551,
      untestable: false,
      reason: null,
    },
    {
      candidate: "pressure",
      probe_value: 5.017173132125565,
      effect: 0.6863650500527521,
      abs_effect: 0.6863650500527521,
      untestable: false,
      reason: null,
    },
    {
      candidate: "temperature",
      probe_value: 29.844116859245638,
      effect: -0.3664241871454078,
      abs_effect: 0.3664241871454078,
      untestable: false,
      reason: null,
    },
  ],
};

export const rootCauseWithUntestable: RootCauseResponse = {
  target: "quality",
  results: [
    ...rootCauseLine.results,
    {
      candidate: "shift_flag",
      probe_value: null,
      effect: null,
      abs_effect: null,
      untestable: true,
      reason: "constant column",
    },
  ],
};

export const rootCauseSingle: RootCauseResponse = {
  target: "quality",
  results: [rootCauseLine.results[1]!],
};

export function errorEnvelope(type: string, message: string): { error: { type: string; message: string } } {
  return { error: { type, message } };
}
