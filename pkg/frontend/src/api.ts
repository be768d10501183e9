/**
 * Thin typed client over the three audit endpoints.
 *
 * The fetch implementation is injectable so tests can run against an
 * in-memory fake and inspect every byte that would go over the wire.
 */

import {
  AgreementReport,
  AuditItem,
  BatchResponse,
  Label,
  LabelResponse,
  asAuditItem,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface ClientOptions {
  baseUrl?: string;
  token?: string;
  fetchImpl?: FetchLike;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class AuditApiClient {
  private readonly baseUrl: string;
  private readonly token?: string;
  private readonly fetchImpl: FetchLike;

  constructor(options: ClientOptions = {}) {
    this.baseUrl = (options.baseUrl ?? "").replace(/\/$/, "");
    this.token = options.token;
    this.fetchImpl = options.fetchImpl ?? fetch.bind(globalThis);
  }

  private headers(json: boolean): Record<string, string> {
    const headers: Record<string, string> = {};
    if (json) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    return headers;
  }

  private async parse<T>(response: Response): Promise<T> {
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        detail = body.detail ?? detail;
      } catch {
        // non-JSON error body, keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  /** Items still unlabeled by this assessor, in audit order. */
  async fetchBatch(assessorId: string): Promise<AuditItem[]> {
    const url = `${this.baseUrl}/api/batch?assessor=${encodeURIComponent(assessorId)}`;
    const response = await this.fetchImpl(url, { headers: this.headers(false) });
    const batch = await this.parse<BatchResponse>(response);
    return batch.items.map(asAuditItem);
  }

  async submitLabel(
    itemId: string,
    label: Label,
    assessorId: string,
  ): Promise<LabelResponse> {
    const response = await this.fetchImpl(`${this.baseUrl}/api/labels`, {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify({ item_id: itemId, label, assessor_id: assessorId }),
    });
    return this.parse<LabelResponse>(response);
  }

  async fetchReport(): Promise<AgreementReport> {
    const response = await this.fetchImpl(`${this.baseUrl}/api/report`, {
      headers: this.headers(false),
    });
    return this.parse<AgreementReport>(response);
  }
}
