/**
 * Thin fetch client for the risk service.
 *
 * One in-flight request per action: submitting again cancels the pending
 * request for that action, so stale responses never land on screen.
 */

import type {
  ErrorBody,
  EstimatePayload,
  RiskReportJson,
  ScrubSummary,
  WhatIfPayload,
  WhatIfResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: ErrorBody,
  ) {
    super(body.message);
    this.name = "ApiError";
  }
}

async function errorBody(response: Response): Promise<ErrorBody> {
  try {
    return (await response.json()) as ErrorBody;
  } catch {
    return { code: "http-error", message: `request failed with status ${response.status}` };
  }
}

export class ApiClient {
  private pending = new Map<string, AbortController>();

  constructor(readonly baseUrl: string = "") {}

  /** Abort any pending request for `action` and register a fresh controller. */
  private takeOver(action: string): AbortSignal {
    this.pending.get(action)?.abort();
    const controller = new AbortController();
    this.pending.set(action, controller);
    return controller.signal;
  }

  private async postJson<T>(action: string, path: string, payload: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
      signal: this.takeOver(action),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await errorBody(response));
    }
    return (await response.json()) as T;
  }

  estimate(payload: EstimatePayload): Promise<RiskReportJson> {
    return this.postJson<RiskReportJson>("estimate", "/api/estimate", payload);
  }

  whatIf(payload: WhatIfPayload): Promise<WhatIfResponse> {
    return this.postJson<WhatIfResponse>("whatif", "/api/whatif", payload);
  }

  async scrub(file: Blob, mode: "year" | "remove"): Promise<{ bytes: ArrayBuffer; summary: ScrubSummary }> {
    const form = new FormData();
    form.append("file", file, "ccr.xml");
    form.append("mode", mode);
    const response = await fetch(this.baseUrl + "/api/ccr/scrub", {
      method: "POST",
      body: form,
      signal: this.takeOver("scrub"),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await errorBody(response));
    }
    const summary = JSON.parse(response.headers.get("X-Scrub-Summary") ?? "{}") as ScrubSummary;
    return { bytes: await response.arrayBuffer(), summary };
  }

  async health(): Promise<{ status: string; population_table: string; version: string }> {
    const response = await fetch(this.baseUrl + "/api/health");
    if (!response.ok) {
      throw new ApiError(response.status, await errorBody(response));
    }
    return await response.json();
  }
}

export function isAbort(error: unknown): boolean {
  return error instanceof DOMException && error.name === "AbortError";
}
