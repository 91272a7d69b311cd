// Pure view functions: UI state in, HTML string out. Service values
// (scores, distances, labels) are rendered verbatim; nothing is recomputed
// here.

import type { NeighborHit, QueryResponse } from "./types"
import type { UiState } from "./state"

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;")
}

export function renderVoteHeader(response: QueryResponse): string {
  const { vote } = response
  const decision = vote.decision === 1 ? "positive" : "negative"
  const pct = vote.score * 100
  return `<header class="vote vote-${decision}">
  <div class="vote-gauge" role="meter" aria-valuemin="0" aria-valuemax="1"
       aria-valuenow="${vote.score}" data-score="${vote.score}">
    <div class="vote-gauge-fill" style="width:${pct}%"></div>
  </div>
  <div class="vote-text">
    <strong>${vote.positives}/${vote.k}</strong> positive neighbors,
    score <strong>${vote.score}</strong>, decision
    <span class="decision">${decision}</span>
  </div>
</header>`
}

export function renderNeighborTile(hit: NeighborHit, imageUrl: string): string {
  const label = hit.label === 1 ? "pneumothorax" : "negative"
  return `<figure class="tile" data-record-id="${escapeHtml(hit.record_id)}">
  <img src="${escapeHtml(imageUrl)}" alt="${escapeHtml(hit.record_id)}"
       loading="lazy" onerror="this.closest('figure').classList.add('no-image')">
  <figcaption>
    <span class="rank">#${hit.rank}</span>
    <span class="record-id">${escapeHtml(hit.record_id)}</span>
    <span class="badge label-${hit.label}">${label}</span>
    <span class="badge source">${escapeHtml(hit.source)}</span>
    <span class="dist2" title="squared distance">${hit.dist2}</span>
  </figcaption>
</figure>`
}

export function renderResultsGrid(
  response: QueryResponse,
  imageUrlFor: (recordId: string) => string,
): string {
  const tiles = response.neighbors
    .map((hit) => renderNeighborTile(hit, imageUrlFor(hit.record_id)))
    .join("\n")
  return `${renderVoteHeader(response)}\n<div class="grid">\n${tiles}\n</div>`
}

export function renderBanner(message: string): string {
  return `<div class="banner error" role="alert">${escapeHtml(message)}</div>`
}

export function renderDetailPanel(state: UiState, imageUrl: string): string {
  if (state.selectedError !== null) {
    return `<aside class="detail">
  <button class="close" data-action="close-detail">×</button>
  <p class="error">${escapeHtml(state.selectedError)}</p>
</aside>`
  }
  const detail = state.selectedNeighbor
  if (detail === null) {
    return ""
  }
  const label = detail.label === 1 ? "pneumothorax" : "negative"
  const image = detail.has_image
    ? `<img class="full" src="${escapeHtml(imageUrl)}" alt="${escapeHtml(detail.record_id)}">`
    : `<div class="placeholder">no image on file</div>`
  return `<aside class="detail" data-record-id="${escapeHtml(detail.record_id)}">
  <button class="close" data-action="close-detail">×</button>
  <h2>${escapeHtml(detail.record_id)}</h2>
  ${image}
  <dl>
    <dt>label</dt><dd class="badge label-${detail.label}">${label}</dd>
    <dt>source</dt><dd>${escapeHtml(detail.source)}</dd>
    <dt>archive row</dt><dd>${detail.row}</dd>
  </dl>
</aside>`
}

export function renderApp(
  state: UiState,
  imageUrlFor: (recordId: string) => string,
): string {
  const parts: string[] = []
  if (state.banner !== null) {
    parts.push(renderBanner(state.banner))
  }
  if (state.lastResponse !== null) {
    parts.push(renderResultsGrid(state.lastResponse, imageUrlFor))
  } else if (!state.busy) {
    parts.push('<p class="empty">Pick a case or upload an image to search.</p>')
  }
  if (state.busy) {
    parts.push('<p class="busy">searching…</p>')
  }
  const panel = renderDetailPanel(
    state,
    state.selectedNeighbor ? imageUrlFor(state.selectedNeighbor.record_id) : "",
  )
  if (panel) {
    parts.push(panel)
  }
  return parts.join("\n")
}
