/** Typed client for the /v1 HTTP API. Every exchange is recorded in the
 * RequestLog before any caller sees the body, and error envelopes are
 * surfaced verbatim so panels can show the server's own message. */

import {
  parseDatasetSummary,
  parseRankResponse,
  parseRootCauseResponse,
  parseRowsPage,
} from "./guards.js";
import { RequestLog } from "./log.js";
import type {
  CandidateDraft,
  DatasetSummary,
  EstimatorId,
  Objective,
  RankResponse,
  RootCauseResponse,
  RowsPage,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** A non-2xx reply. `kind` and `message` repeat the server's error
 * envelope verbatim when one was sent. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly kind: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }

  /** How panels surface it: the server's own words, prefixed by type. */
  display(): string {
    return `${this.kind}: ${this.message}`;
  }

  static from(status: number, body: unknown): ApiError {
    if (
      typeof body === "object" &&
      body !== null &&
      "error" in body &&
      typeof (body as { error: unknown }).error === "object" &&
      (body as { error: unknown }).error !== null
    ) {
      const envelope = (body as { error: { type?: unknown; message?: unknown } }).error;
      return new ApiError(
        status,
        typeof envelope.type === "string" ? envelope.type : `http_${status}`,
        typeof envelope.message === "string" ? envelope.message : "request failed",
      );
    }
    return new ApiError(status, `http_${status}`, `request failed with status ${status}`);
  }
}

export class ApiClient {
  constructor(
    private readonly fetchFn: FetchLike,
    private readonly baseUrl: string,
    readonly log: RequestLog,
  ) {}

  private async request(
    method: string,
    path: string,
    body: string | null,
    contentType: string | null,
  ): Promise<unknown> {
    const entry = this.log.open(
      method,
      path,
      contentType === "application/json" && body !== null ? JSON.parse(body) : body,
    );
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, {
        method,
        headers: contentType === null ? undefined : { "Content-Type": contentType },
        body: body ?? undefined,
      });
    } catch (err) {
      this.log.fail(entry, String(err));
      throw err;
    }
    const text = await response.text();
    let parsed: unknown = text;
    try {
      parsed = text === "" ? null : JSON.parse(text);
    } catch {
      // non-JSON body stays as text
    }
    this.log.settle(entry, response.status, parsed);
    if (!response.ok) {
      throw ApiError.from(response.status, parsed);
    }
    return parsed;
  }

  private json(method: string, path: string, payload: unknown): Promise<unknown> {
    return this.request(method, path, JSON.stringify(payload), "application/json");
  }

  async uploadCsv(csvText: string): Promise<DatasetSummary> {
    const body = await this.request("POST", "/v1/datasets", csvText, "text/csv");
    return parseDatasetSummary(body);
  }

  async getDataset(id: string): Promise<DatasetSummary> {
    const body = await this.request("GET", `/v1/datasets/${encodeURIComponent(id)}`, null, null);
    return parseDatasetSummary(body);
  }

  async getRows(id: string, limit = 50, offset = 0): Promise<RowsPage> {
    const body = await this.request(
      "GET",
      `/v1/datasets/${encodeURIComponent(id)}/rows?limit=${limit}&offset=${offset}`,
      null,
      null,
    );
    return parseRowsPage(body);
  }

  async patchColumns(
    id: string,
    patch: { kinds?: Record<string, string>; roles?: Record<string, string> },
  ): Promise<DatasetSummary> {
    const body = await this.json(
      "PATCH",
      `/v1/datasets/${encodeURIComponent(id)}/columns`,
      patch,
    );
    return parseDatasetSummary(body);
  }

  async rank(request: {
    dataset_id: string;
    outcome_column: string;
    candidates: CandidateDraft[];
    objective: Objective;
    estimator: EstimatorId;
  }): Promise<RankResponse> {
    const candidates = request.candidates.map((c) => {
      const entry: { column: string; t1?: number; t0?: number } = { column: c.column };
      if (c.t1 !== null) entry.t1 = c.t1;
      if (c.t0 !== null) entry.t0 = c.t0;
      return entry;
    });
    const body = await this.json("POST", "/v1/rank", {
      dataset_id: request.dataset_id,
      outcome_column: request.outcome_column,
      candidates,
      objective: request.objective,
      estimator: request.estimator,
    });
    return parseRankResponse(body);
  }

  async rootCause(request: {
    dataset_id: string;
    target_column: string;
    candidates: string[];
    estimator: EstimatorId;
  }): Promise<RootCauseResponse> {
    const body = await this.json("POST", "/v1/root-cause", {
      dataset_id: request.dataset_id,
      target_column: request.target_column,
      candidates: request.candidates,
      estimator: request.estimator,
    });
    return parseRootCauseResponse(body);
  }
}
