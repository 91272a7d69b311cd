"""HTTP query service over one read-only feature store.

The store is loaded once at startup and never mutated, so any number of
request handlers can share it. Wire format is JSON with a schema version
field ``v: 1``. Every request is logged as one JSON line.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import time
from contextlib import asynccontextmanager
from pathlib import Path

import httpx
import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from .knn import SearchParams, top_k_search
from .store import FeatureStore, open_store
from .vote import majority_vote

log = logging.getLogger("cxrsearch.service")

DEFAULT_K = 11


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse({"v": 1, "error": message}, status_code=status)


def create_app(store_path: str | None = None, *,
               store: FeatureStore | None = None,
               image_dir: str | None = None,
               extractor_url: str | None = None) -> FastAPI:
    """App over one store. ``store`` short-circuits loading (tests);
    otherwise ``store_path`` is opened during startup."""

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if app.state.store is None and store_path is not None:
            app.state.store = open_store(store_path)
        yield

    app = FastAPI(lifespan=lifespan)
    app.state.store = store
    app.state.image_dir = Path(image_dir) if image_dir else None
    app.state.extractor_url = extractor_url

    @app.middleware("http")
    async def request_log(request: Request, call_next):
        start = time.perf_counter()
        response = await call_next(request)
        log.info(json.dumps({
            "method": request.method,
            "path": request.url.path,
            "status": response.status_code,
            "ms": round((time.perf_counter() - start) * 1000, 3),
        }, sort_keys=True))
        return response

    @app.get("/v1/store")
    async def store_summary():
        st: FeatureStore | None = app.state.store
        if st is None:
            return _error(503, "store not loaded")
        neg, pos = st.class_counts()
        sources: dict[str, int] = {}
        for m in st.meta:
            sources[m.source] = sources.get(m.source, 0) + 1
        return {
            "v": 1,
            "n_records": st.n_records,
            "dim": st.dim,
            "class_counts": {"positive": pos, "negative": neg},
            "sources": sources,
        }

    @app.post("/v1/query")
    async def query(request: Request):
        st: FeatureStore | None = app.state.store
        if st is None:
            return _error(503, "store not loaded")
        try:
            body = await request.json()
        except Exception:
            return _error(400, "request body is not valid JSON")
        if not isinstance(body, dict):
            return _error(400, "request body must be a JSON object")
        sources = [s for s in ("vector", "record_id", "image_ref")
                   if body.get(s) is not None]
        if len(sources) != 1:
            return _error(
                400, "exactly one of vector, record_id, image_ref required")
        k = body.get("k", DEFAULT_K)
        if not isinstance(k, int) or isinstance(k, bool):
            return _error(400, "k must be an integer")
        exclude_self = body.get("exclude_self", False)
        if not isinstance(exclude_self, bool):
            return _error(400, "exclude_self must be a boolean")

        exclude: frozenset[int] = frozenset()
        source = sources[0]
        if source == "vector":
            raw = body["vector"]
            if (not isinstance(raw, list)
                    or not all(isinstance(x, (int, float))
                               and not isinstance(x, bool) for x in raw)):
                return _error(400, "vector must be a list of numbers")
            vector = np.asarray(raw, dtype=np.float32)
        elif source == "record_id":
            if not isinstance(body["record_id"], str):
                return _error(400, "record_id must be a string")
            try:
                row = st.index_of(body["record_id"])
            except KeyError:
                return _error(422, f"unknown record_id {body['record_id']!r}")
            vector = st.vectors[row]
            if exclude_self:
                exclude = frozenset([row])
        else:
            if not isinstance(body["image_ref"], str):
                return _error(400, "image_ref must be a string")
            if app.state.extractor_url is None:
                return _error(502, "no extractor endpoint configured")
            try:
                async with httpx.AsyncClient(timeout=60.0) as client:
                    reply = await client.post(
                        app.state.extractor_url,
                        json={"image_ref": body["image_ref"]})
            except httpx.HTTPError as exc:
                return _error(502, f"extractor unreachable: {exc}")
            if reply.status_code != 200:
                return _error(
                    502, f"extractor returned status {reply.status_code}")
            vector = np.asarray(reply.json().get("vector"), dtype=np.float32)

        start = time.perf_counter()
        try:
            neighbors = top_k_search(st, vector,
                                     SearchParams(k=k, exclude=exclude))
        except ValueError as exc:
            return _error(422, str(exc))
        vote = majority_vote(neighbors)
        timing_ms = (time.perf_counter() - start) * 1000
        return {
            "v": 1,
            "neighbors": [
                {
                    "rank": rank,
                    "record_id": st.meta[n.index].record_id,
                    "dist2": n.dist2,
                    "label": n.label,
                    "source": st.meta[n.index].source,
                }
                for rank, n in enumerate(neighbors, start=1)
            ],
            "vote": {
                "score": vote.score,
                "decision": vote.decision,
                "k": vote.k,
                "positives": vote.positives,
            },
            "timing_ms": timing_ms,
        }

    @app.get("/v1/record/{record_id}")
    async def record_meta(record_id: str):
        st: FeatureStore | None = app.state.store
        if st is None:
            return _error(503, "store not loaded")
        try:
            row = st.index_of(record_id)
        except KeyError:
            return _error(404, f"unknown record_id {record_id!r}")
        m = st.meta[row]
        return {
            "v": 1,
            "record_id": m.record_id,
            "label": m.label,
            "source": m.source,
            "row": row,
            "has_image": _image_path(app, m.record_id) is not None,
        }

    @app.get("/v1/record/{record_id}/image")
    async def record_image(record_id: str):
        st: FeatureStore | None = app.state.store
        if st is None:
            return _error(503, "store not loaded")
        try:
            st.index_of(record_id)
        except KeyError:
            return _error(404, f"unknown record_id {record_id!r}")
        path = _image_path(app, record_id)
        if path is None:
            return _error(404, f"no image available for {record_id!r}")
        media_type = mimetypes.guess_type(path.name)[0] or "application/octet-stream"
        return Response(content=path.read_bytes(), media_type=media_type)

    return app


def _image_path(app: FastAPI, record_id: str) -> Path | None:
    """First file under the image dir matching <record_id>.<ext>."""
    image_dir: Path | None = app.state.image_dir
    if image_dir is None or "/" in record_id or "\\" in record_id:
        return None
    for ext in ("png", "jpg", "jpeg"):
        candidate = image_dir / f"{record_id}.{ext}"
        if candidate.is_file():
            return candidate
    return None


def serve(store_path: str, *, host: str = "127.0.0.1", port: int = 8200,
          image_dir: str | None = None,
          extractor_url: str | None = None) -> None:
    """Run the service until interrupted."""
    import uvicorn

    logging.basicConfig(level=logging.INFO, format="%(message)s")
    app = create_app(store_path, image_dir=image_dir,
                     extractor_url=extractor_url)
    uvicorn.run(app, host=host, port=port, log_level="warning")
