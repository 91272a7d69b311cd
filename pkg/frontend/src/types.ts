// Wire types for the /v1 JSON API (schema version field v: 1).

export interface NeighborHit {
  rank: number
  record_id: string
  dist2: number
  label: number
  source: string
}

export interface Vote {
  score: number
  decision: number
  k: number
  positives: number
}

export interface QueryResponse {
  v: number
  neighbors: NeighborHit[]
  vote: Vote
  timing_ms: number
}

export interface StoreSummary {
  v: number
  n_records: number
  dim: number
  class_counts: { positive: number; negative: number }
  sources: Record<string, number>
}

export interface RecordDetail {
  v: number
  record_id: string
  label: number
  source: string
  row: number
  has_image: boolean
}

export type QuerySource =
  | { record_id: string }
  | { vector: number[] }
  | { image_ref: string }
