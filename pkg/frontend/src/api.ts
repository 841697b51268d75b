/** Thin typed client for the review backend.
 *
 * Every verdict shown in the UI comes from these calls; the frontend never
 * normalizes or scores anything locally.
 */

import type {
  AuditSummary,
  DiffPayload,
  ReviewAck,
  Responsible,
  TestDetail,
  TestPatch,
  TestSummary,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function readDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
  } catch {
    /* fall through to status text */
  }
  return response.statusText || `HTTP ${response.status}`;
}

export class ReviewApi {
  constructor(readonly baseUrl: string) {}

  private async requestJson<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, await readDetail(response));
    }
    return (await response.json()) as T;
  }

  listTests(params: {
    category?: string;
    status?: string;
    model?: string;
  }): Promise<{ tests: TestSummary[] }> {
    const query = new URLSearchParams();
    if (params.category) query.set("category", params.category);
    if (params.status) query.set("status", params.status);
    if (params.model) query.set("model", params.model);
    const suffix = query.toString() ? `?${query}` : "";
    return this.requestJson(`/tests${suffix}`);
  }

  getTest(id: string, model?: string): Promise<TestDetail> {
    const suffix = model ? `?model=${encodeURIComponent(model)}` : "";
    return this.requestJson(`/tests/${encodeURIComponent(id)}${suffix}`);
  }

  getDiff(id: string, model: string): Promise<DiffPayload> {
    return this.requestJson(
      `/tests/${encodeURIComponent(id)}/diff?model=${encodeURIComponent(model)}`,
    );
  }

  patchTest(id: string, patch: TestPatch, model?: string): Promise<TestDetail> {
    const suffix = model ? `?model=${encodeURIComponent(model)}` : "";
    return this.requestJson(`/tests/${encodeURIComponent(id)}${suffix}`, {
      method: "PATCH",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(patch),
    });
  }

  postReview(body: {
    test_id: string;
    label: string;
    responsible: Responsible;
    reviewer?: string;
    comment?: string;
  }): Promise<ReviewAck> {
    return this.requestJson("/reviews", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  auditSummary(): Promise<AuditSummary> {
    return this.requestJson("/audit/summary");
  }

  async candidate(docId: string, model: string): Promise<string> {
    const response = await fetch(this.candidateUrl(docId, model));
    if (!response.ok) {
      throw new ApiError(response.status, await readDetail(response));
    }
    return response.text();
  }

  candidateUrl(docId: string, model: string): string {
    return `${this.baseUrl}/docs/${encodeURIComponent(docId)}/candidate/${model}`;
  }

  imageUrl(docId: string): string {
    return `${this.baseUrl}/docs/${encodeURIComponent(docId)}/image`;
  }
}
