import type { QueryResponse, RecordDetail } from "../src/types"

// canned response as the service emits it (K=11, 6 positive neighbors)
export const cannedResponse: QueryResponse = {
  v: 1,
  neighbors: [
    { rank: 1, record_id: "case-001", dist2: 0.0, label: 1, source: "chexpert" },
    { rank: 2, record_id: "case-014", dist2: 12.25, label: 1, source: "chexpert" },
    { rank: 3, record_id: "case-203", dist2: 13.5, label: 0, source: "mimic-cxr" },
    { rank: 4, record_id: "case-077", dist2: 14.125, label: 1, source: "chestxray14" },
    { rank: 5, record_id: "case-310", dist2: 15.0, label: 0, source: "mimic-cxr" },
    { rank: 6, record_id: "case-118", dist2: 15.625, label: 1, source: "chexpert" },
    { rank: 7, record_id: "case-026", dist2: 16.0, label: 0, source: "chestxray14" },
    { rank: 8, record_id: "case-400", dist2: 17.75, label: 1, source: "mimic-cxr" },
    { rank: 9, record_id: "case-055", dist2: 18.5, label: 0, source: "chexpert" },
    { rank: 10, record_id: "case-242", dist2: 19.0, label: 1, source: "chestxray14" },
    { rank: 11, record_id: "case-388", dist2: 21.25, label: 0, source: "mimic-cxr" },
  ],
  vote: { score: 0.5454545454545454, decision: 1, k: 11, positives: 6 },
  timing_ms: 4.2,
}

export const cannedDetail: RecordDetail = {
  v: 1,
  record_id: "case-014",
  label: 1,
  source: "chexpert",
  row: 14,
  has_image: true,
}
