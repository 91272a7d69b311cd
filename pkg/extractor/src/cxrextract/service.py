"""HTTP sidecar: one model instance answering single-image embed requests.

POST /extract accepts either a multipart image upload (field ``file``) or
a JSON body ``{"image_ref": "<path>"}`` naming an image readable by this
process; both return ``{"vector": [...1024 floats...]}``.
"""

from __future__ import annotations

import asyncio
import io
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, Request, UploadFile
from fastapi.responses import JSONResponse
from PIL import UnidentifiedImageError

from .features import ExtractConfig, FeatureExtractor, default_config


def create_app(config: ExtractConfig | None = None) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.extractor = FeatureExtractor(config or default_config())
        yield

    app = FastAPI(lifespan=lifespan)
    app.state.extractor = None
    # one model instance: inference is serialized, requests queue
    app.state.lock = asyncio.Lock()

    def embed_or_415(source) -> JSONResponse | list[float]:
        try:
            vector = app.state.extractor.embed_file(source)
        except (UnidentifiedImageError, OSError):
            return JSONResponse({"error": "undecodable image"},
                                status_code=415)
        return vector.tolist()

    @app.post("/extract")
    async def extract(request: Request, file: UploadFile | None = None):
        if app.state.extractor is None:
            return JSONResponse({"error": "model loading"}, status_code=503)
        async with app.state.lock:
            if file is not None:
                payload = embed_or_415(io.BytesIO(await file.read()))
            else:
                try:
                    body = await request.json()
                except Exception:
                    return JSONResponse(
                        {"error": "upload a file or send {\"image_ref\": ...}"},
                        status_code=415)
                ref = body.get("image_ref") if isinstance(body, dict) else None
                if not isinstance(ref, str):
                    return JSONResponse({"error": "image_ref required"},
                                        status_code=415)
                if not Path(ref).is_file():
                    return JSONResponse(
                        {"error": f"no such image: {ref}"}, status_code=415)
                payload = embed_or_415(ref)
        if isinstance(payload, JSONResponse):
            return payload
        return {"vector": payload}

    return app


def serve(port: int = 8210, host: str = "127.0.0.1",
          config: ExtractConfig | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=host, port=port,
                log_level="warning")
