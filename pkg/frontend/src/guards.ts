/** Structural checks applied to API response bodies at the client
 * boundary. The client displays server numbers verbatim, so a response
 * with the wrong shape must fail loudly here rather than render as
 * NaN or undefined somewhere downstream. */

import type {
  DatasetSummary,
  RankResponse,
  RootCauseResponse,
  RowsPage,
} from "./types.js";

export class ApiShapeError extends Error {
  constructor(what: string, body: unknown) {
    super(`unexpected ${what} response shape: ${JSON.stringify(body)?.slice(0, 200)}`);
    this.name = "ApiShapeError";
  }
}

function isRecord(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function isNumberOrNull(v: unknown): v is number | null {
  return v === null || isFiniteNumber(v);
}

export function parseDatasetSummary(body: unknown): DatasetSummary {
  if (
    isRecord(body) &&
    typeof body.id === "string" &&
    isFiniteNumber(body.n_rows) &&
    Array.isArray(body.columns) &&
    body.columns.every(
      (c) =>
        isRecord(c) &&
        typeof c.name === "string" &&
        (c.kind === "continuous" || c.kind === "categorical") &&
        (c.categories === null || isFiniteNumber(c.categories)) &&
        (c.role === "covariate" || c.role === "treatment" || c.role === "outcome"),
    )
  ) {
    return body as unknown as DatasetSummary;
  }
  throw new ApiShapeError("dataset", body);
}

export function parseRowsPage(body: unknown): RowsPage {
  if (
    isRecord(body) &&
    Array.isArray(body.columns) &&
    body.columns.every((c) => typeof c === "string") &&
    isFiniteNumber(body.offset) &&
    isFiniteNumber(body.total_rows) &&
    Array.isArray(body.rows) &&
    body.rows.every((r) => Array.isArray(r) && r.every(isFiniteNumber))
  ) {
    return body as unknown as RowsPage;
  }
  throw new ApiShapeError("rows", body);
}

export function parseRankResponse(body: unknown): RankResponse {
  if (
    isRecord(body) &&
    (body.objective === "maximize" || body.objective === "minimize") &&
    typeof body.estimator === "string" &&
    Array.isArray(body.ranking) &&
    body.ranking.every(
      (e) =>
        isRecord(e) &&
        typeof e.candidate === "string" &&
        isFiniteNumber(e.t1) &&
        isFiniteNumber(e.t0) &&
        isNumberOrNull(e.estimate) &&
        isNumberOrNull(e.lower) &&
        isNumberOrNull(e.upper) &&
        typeof e.flagged === "boolean" &&
        (e.reason === null || typeof e.reason === "string"),
    )
  ) {
    return body as unknown as RankResponse;
  }
  throw new ApiShapeError("rank", body);
}

export function parseRootCauseResponse(body: unknown): RootCauseResponse {
  if (
    isRecord(body) &&
    typeof body.target === "string" &&
    Array.isArray(body.results) &&
    body.results.every(
      (e) =>
        isRecord(e) &&
        typeof e.candidate === "string" &&
        isNumberOrNull(e.probe_value) &&
        isNumberOrNull(e.effect) &&
        isNumberOrNull(e.abs_effect) &&
        typeof e.untestable === "boolean" &&
        (e.reason === null || typeof e.reason === "string"),
    )
  ) {
    return body as unknown as RootCauseResponse;
  }
  throw new ApiShapeError("root-cause", body);
}
