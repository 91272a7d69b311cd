// UI state. The rendered vote gauge always equals the score in
// lastResponse: state never stores derived values.

import type { QueryResponse, QuerySource, RecordDetail } from "./types"

export const K_MIN = 1
export const K_MAX = 51
export const K_DEFAULT = 11

export interface UiState {
  query: QuerySource | null
  k: number
  excludeSelf: boolean
  lastResponse: QueryResponse | null
  selectedNeighbor: RecordDetail | null
  selectedError: string | null
  banner: string | null
  busy: boolean
}

export function initialState(): UiState {
  return {
    query: null,
    k: K_DEFAULT,
    excludeSelf: true,
    lastResponse: null,
    selectedNeighbor: null,
    selectedError: null,
    banner: null,
    busy: false,
  }
}

// The K control only offers odd values between 1 and 51.
export function clampK(value: number): number {
  const bounded = Math.min(K_MAX, Math.max(K_MIN, Math.round(value)))
  return bounded % 2 === 0 ? bounded - 1 : bounded
}
