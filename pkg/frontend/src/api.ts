import type { ActionMatrix } from "./matrix.js";
import type {
  CaseDoc,
  FeedItemDoc,
  ReportDoc,
  VerificationResultDoc,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public entityRef: string | null = null,
  ) {
    super(message);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Thin client over the coordination service; every method is one API call. */
export class ApiClient {
  constructor(
    private baseUrl: string,
    private token: string,
    private fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const headers: Record<string, string> = {
      authorization: `Bearer ${this.token}`,
    };
    if (body !== undefined) headers["content-type"] = "application/json";
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await resp.json();
    if (!resp.ok) {
      throw new ApiError(
        resp.status,
        payload.code ?? "unknown",
        payload.message ?? resp.statusText,
        payload.entity_ref ?? null,
      );
    }
    return payload as T;
  }

  listCases(): Promise<{ cases: CaseDoc[] }> {
    return this.request("GET", "/cases");
  }

  getCase(caseId: string): Promise<CaseDoc> {
    return this.request("GET", `/cases/${caseId}`);
  }

  getReport(caseId: string): Promise<ReportDoc> {
    return this.request("GET", `/cases/${caseId}/report`);
  }

  getVerifications(
    caseId: string,
  ): Promise<{ results: VerificationResultDoc[] }> {
    return this.request("GET", `/cases/${caseId}/verifications`);
  }

  submitReport(doc: unknown): Promise<{ entity: CaseDoc; sequence: number }> {
    return this.request("POST", "/reports", doc);
  }

  caseAction(
    caseId: string,
    action: string,
    body: unknown,
  ): Promise<{ entity: CaseDoc; sequence: number }> {
    return this.request("POST", `/cases/${caseId}/${action}`, body);
  }

  getMatrix(): Promise<ActionMatrix> {
    return this.request("GET", "/matrix");
  }

  getFeed(): Promise<{ disclosures: FeedItemDoc[] }> {
    return this.request("GET", "/feed");
  }
}
