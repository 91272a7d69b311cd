// Thin client for the query service. Every interaction with the backend
// goes through these documented /v1 endpoints; there is no other API.

import type { QueryResponse, QuerySource, RecordDetail, StoreSummary } from "./types"

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message)
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async getJson<T>(path: string, init?: RequestInit): Promise<T> {
    const reply = await this.fetchImpl(`${this.baseUrl}${path}`, init)
    const body = await reply.json().catch(() => ({}))
    if (!reply.ok) {
      const detail = (body as { error?: string }).error ?? `HTTP ${reply.status}`
      throw new ApiError(reply.status, detail)
    }
    return body as T
  }

  storeSummary(): Promise<StoreSummary> {
    return this.getJson<StoreSummary>("/v1/store")
  }

  query(
    source: QuerySource,
    k: number,
    excludeSelf: boolean,
    signal?: AbortSignal,
  ): Promise<QueryResponse> {
    return this.getJson<QueryResponse>("/v1/query", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ ...source, k, exclude_self: excludeSelf }),
      signal,
    })
  }

  record(recordId: string): Promise<RecordDetail> {
    return this.getJson<RecordDetail>(`/v1/record/${encodeURIComponent(recordId)}`)
  }

  imageUrl(recordId: string): string {
    return `${this.baseUrl}/v1/record/${encodeURIComponent(recordId)}/image`
  }
}
