// Browser entry point: wires DOM controls to the controller and renders
// into #app. Configuration is a single base URL (?service=... or same
// origin).

import { ApiClient } from "./api"
import { AppController } from "./controller"
import { renderApp } from "./render"
import { K_DEFAULT } from "./state"

function baseUrl(): string {
  const params = new URLSearchParams(window.location.search)
  return params.get("service") ?? ""
}

function init(): void {
  const client = new ApiClient(baseUrl())
  const app = document.getElementById("app")!
  const controller = new AppController(client, (state) => {
    app.innerHTML = renderApp(state, (id) => client.imageUrl(id))
    const kLabel = document.getElementById("k-value")
    if (kLabel) {
      kLabel.textContent = String(state.k)
    }
  })

  const recordInput = document.getElementById("record-id") as HTMLInputElement
  const fileInput = document.getElementById("image-file") as HTMLInputElement
  const kSlider = document.getElementById("k-slider") as HTMLInputElement
  const excludeToggle = document.getElementById(
    "exclude-self",
  ) as HTMLInputElement
  kSlider.value = String(K_DEFAULT)

  document.getElementById("search-record")!.addEventListener("click", () => {
    const recordId = recordInput.value.trim()
    if (recordId) {
      void controller.submitQuery({ record_id: recordId })
    }
  })

  fileInput.addEventListener("change", () => {
    const file = fileInput.files?.[0]
    if (file) {
      // the service forwards the handle to the extractor sidecar, which
      // resolves it; for local setups this is a path both can see
      void controller.submitQuery({ image_ref: file.name })
    }
  })

  kSlider.addEventListener("change", () => {
    void controller.changeK(Number(kSlider.value))
  })

  excludeToggle.addEventListener("change", () => {
    controller.setExcludeSelf(excludeToggle.checked)
  })

  app.addEventListener("click", (event) => {
    const target = event.target as HTMLElement
    if (target.closest("[data-action='close-detail']")) {
      controller.closeDetail()
      return
    }
    const tile = target.closest<HTMLElement>(".tile[data-record-id]")
    if (tile) {
      void controller.inspectNeighbor(tile.dataset.recordId!)
    }
  })

  void client
    .storeSummary()
    .then((summary) => {
      const status = document.getElementById("store-status")
      if (status) {
        status.textContent =
          `${summary.n_records.toLocaleString()} cases ` +
          `(${summary.class_counts.positive.toLocaleString()} positive), ` +
          `dim ${summary.dim}`
      }
    })
    .catch(() => undefined)
}

window.addEventListener("DOMContentLoaded", init)
