// Interaction logic: holds the state, talks to the service, re-renders.
// At most one query request is in flight; a new submission aborts the
// previous one. Failed requests surface as a banner and leave the last
// results on screen.

import { ApiClient, ApiError } from "./api"
import { clampK, initialState, type UiState } from "./state"
import type { QuerySource } from "./types"

export class AppController {
  state: UiState = initialState()
  private inflight: AbortController | null = null

  constructor(
    private client: ApiClient,
    private onChange: (state: UiState) => void = () => {},
  ) {}

  private update(patch: Partial<UiState>): void {
    this.state = { ...this.state, ...patch }
    this.onChange(this.state)
  }

  async submitQuery(source: QuerySource, k?: number): Promise<void> {
    if (k !== undefined) {
      this.state = { ...this.state, k: clampK(k) }
    }
    this.inflight?.abort()
    const controller = new AbortController()
    this.inflight = controller
    this.update({ query: source, busy: true, banner: null })
    try {
      const response = await this.client.query(
        source,
        this.state.k,
        this.state.excludeSelf,
        controller.signal,
      )
      if (this.inflight !== controller) {
        return // a newer submission superseded this one
      }
      this.update({ lastResponse: response, busy: false })
    } catch (err) {
      if (controller.signal.aborted) {
        return
      }
      const message =
        err instanceof ApiError
          ? `query failed (${err.status}): ${err.message}`
          : `service unreachable: ${String(err)}`
      // previous results stay visible under the banner
      this.update({ banner: message, busy: false })
    } finally {
      if (this.inflight === controller) {
        this.inflight = null
      }
    }
  }

  // Changing K re-issues the current query exactly once.
  async changeK(k: number): Promise<void> {
    const next = clampK(k)
    if (next === this.state.k) {
      return
    }
    this.state = { ...this.state, k: next }
    if (this.state.query !== null) {
      await this.submitQuery(this.state.query)
    } else {
      this.onChange(this.state)
    }
  }

  setExcludeSelf(value: boolean): void {
    this.update({ excludeSelf: value })
  }

  async inspectNeighbor(recordId: string): Promise<void> {
    const known = this.state.lastResponse?.neighbors.some(
      (n) => n.record_id === recordId,
    )
    if (!known) {
      return
    }
    try {
      const detail = await this.client.record(recordId)
      this.update({ selectedNeighbor: detail, selectedError: null })
    } catch (err) {
      const message =
        err instanceof ApiError && err.status === 404
          ? `record ${recordId} not found`
          : `could not load ${recordId}: ${String(err)}`
      this.update({ selectedNeighbor: null, selectedError: message })
    }
  }

  closeDetail(): void {
    this.update({ selectedNeighbor: null, selectedError: null })
  }
}
