/** Request/response log: every API exchange the client makes is recorded
 * here, and panels render numbers only out of stored responses — so any
 * value on screen can be traced to a log entry. The helpers at the bottom
 * make that invariant checkable: collect every number a logged response
 * could justify and test a displayed value against the set. */

export interface LogEntry {
  seq: number;
  method: string;
  path: string;
  requestBody: unknown;
  status: number | null;
  responseBody: unknown;
  phase: "pending" | "done" | "failed";
  error: string | null;
}

export class RequestLog {
  readonly entries: LogEntry[] = [];
  private nextSeq = 1;
  private listeners = new Set<() => void>();

  open(method: string, path: string, requestBody: unknown): LogEntry {
    const entry: LogEntry = {
      seq: this.nextSeq++,
      method,
      path,
      requestBody,
      status: null,
      responseBody: null,
      phase: "pending",
      error: null,
    };
    this.entries.push(entry);
    this.emit();
    return entry;
  }

  settle(entry: LogEntry, status: number, responseBody: unknown): void {
    entry.status = status;
    entry.responseBody = responseBody;
    entry.phase = "done";
    this.emit();
  }

  fail(entry: LogEntry, message: string): void {
    entry.phase = "failed";
    entry.error = message;
    this.emit();
  }

  onChange(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }
}

const NUMERIC_TOKEN = /-?\d+(?:\.\d+)?/g;

/** Every number a value can justify on screen: numeric leaves, the length
 * of every array (panels may label collections with their count, e.g.
 * "4 columns" for a 4-element column list), and numeric tokens embedded
 * in strings (ids and server messages are rendered verbatim). */
export function collectNumbers(value: unknown, out: Set<number> = new Set()): Set<number> {
  if (typeof value === "number" && Number.isFinite(value)) {
    out.add(value);
  } else if (typeof value === "string") {
    for (const token of value.match(NUMERIC_TOKEN) ?? []) {
      out.add(Number(token));
    }
  } else if (Array.isArray(value)) {
    out.add(value.length);
    for (const item of value) collectNumbers(item, out);
  } else if (typeof value === "object" && value !== null) {
    for (const item of Object.values(value)) collectNumbers(item, out);
  }
  return out;
}

/** Whether some completed response in the log contains a number that the
 * displayed value could be a rounding of (tolerance is relative because
 * panels render at 4 decimal places). */
export function logContainsNumber(
  log: RequestLog,
  value: number,
  relativeTolerance = 1e-4,
): boolean {
  for (const entry of log.entries) {
    if (entry.phase !== "done") continue;
    for (const candidate of collectNumbers(entry.responseBody)) {
      if (Math.abs(candidate - value) <= relativeTolerance * Math.max(1, Math.abs(value))) {
        return true;
      }
    }
  }
  return false;
}
