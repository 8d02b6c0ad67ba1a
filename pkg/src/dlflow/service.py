"""HTTP JSON service: validation, code generation, diagram extraction and
a persistent design store with ratings — the backend the design editor
talks to."""

from __future__ import annotations

import io
import json

import numpy as np
from fastapi import FastAPI, Request, Response, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from PIL import Image, UnidentifiedImageError

from . import codegen
from .extract import ExtractorConfig, extract
from .graph import CompGraph, ParseError, from_json, to_json, validate
from .store import DesignStore, InvalidRating, NotFound, StoreError, VersionConflict

MAX_BODY_BYTES = 8 * 1024 * 1024

API = "/api/v1"


def _error(status: int, message: str, **extra) -> JSONResponse:
    return JSONResponse({"error": message, **extra}, status_code=status)


async def _read_graph(request: Request) -> CompGraph | JSONResponse:
    body = await request.body()
    if len(body) > MAX_BODY_BYTES:
        return _error(413, "request body too large")
    try:
        return from_json(body.decode("utf-8"))
    except (UnicodeDecodeError, ParseError) as exc:
        return _error(400, f"malformed graph: {exc}")


def _record_json(record) -> dict:
    return record.to_dict()


def create_app(
    store: DesignStore | None = None,
    cors_origins: list[str] | None = None,
    max_body_bytes: int = MAX_BODY_BYTES,
) -> FastAPI:
    app = FastAPI(title="design service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store

    @app.middleware("http")
    async def limit_body(request: Request, call_next):
        length = request.headers.get("content-length")
        if length and length.isdigit() and int(length) > max_body_bytes:
            return _error(413, "request body too large")
        return await call_next(request)

    def need_store() -> DesignStore:
        if app.state.store is None:
            raise StoreError("service started without a store")
        return app.state.store

    # -- stateless pipeline endpoints ---------------------------------------

    @app.post(API + "/validate")
    async def validate_graph(request: Request):
        graph = await _read_graph(request)
        if isinstance(graph, JSONResponse):
            return graph
        return validate(graph).to_dict()

    @app.post(API + "/codegen/{dialect}")
    async def codegen_endpoint(dialect: str, request: Request):
        if dialect not in codegen.DIALECTS:
            return _error(404, f"unknown dialect {dialect!r}")
        graph = await _read_graph(request)
        if isinstance(graph, JSONResponse):
            return graph
        report = validate(graph, strict_domains=False)
        if not report.ok:
            return JSONResponse(
                {"error": "invalid graph", "report": report.to_dict()}, status_code=422
            )
        return {"code": codegen.generate(graph, dialect)}

    @app.post(API + "/extract")
    async def extract_endpoint(image: UploadFile):
        data = await image.read()
        if len(data) > max_body_bytes:
            return _error(413, "request body too large")
        try:
            arr = np.asarray(Image.open(io.BytesIO(data)).convert("RGB"))
        except (UnidentifiedImageError, OSError) as exc:
            return _error(400, f"cannot decode image: {exc}")
        result = extract(arr, ExtractorConfig())
        return {
            "blobs": [
                {
                    "bbox": list(b.bbox),
                    "raw_text": b.raw_text,
                    "corrected_label": b.corrected_label,
                    "params": b.params,
                    "return_seq": b.return_seq,
                    "confidence": b.confidence,
                }
                for b in result.blobs
            ],
            "arrows": [
                {"src": a.src_blob_idx, "dst": a.dst_blob_idx, "polyline": a.polyline}
                for a in result.arrows
            ],
            "graph": json.loads(to_json(result.graph)),
            "diagnostics": result.diagnostics,
        }

    # -- design CRUD --------------------------------------------------------

    @app.get(API + "/designs")
    async def list_designs():
        store = need_store()
        return {"designs": [_record_json(store.get(i)) for i in store.list_ids()]}

    @app.post(API + "/designs")
    async def create_design(request: Request):
        store = need_store()
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError as exc:
            return _error(400, f"malformed body: {exc}")
        if not isinstance(body, dict) or "graph" not in body:
            return _error(400, "body must be an object with a 'graph' field")
        try:
            record = store.create(
                body["graph"],
                provenance=body.get("provenance", "edited"),
                source_ref=body.get("source_ref"),
            )
        except StoreError as exc:
            return _error(400, str(exc))
        return JSONResponse(_record_json(record), status_code=201)

    @app.get(API + "/designs/{design_id}")
    async def get_design(design_id: str):
        try:
            return _record_json(need_store().get(design_id))
        except NotFound as exc:
            return _error(404, str(exc))

    @app.put(API + "/designs/{design_id}")
    async def update_design(design_id: str, request: Request):
        store = need_store()
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError as exc:
            return _error(400, f"malformed body: {exc}")
        if not isinstance(body, dict) or "graph" not in body or "version" not in body:
            return _error(400, "body must carry 'graph' and 'version'")
        try:
            record = store.update(design_id, body["graph"], body["version"])
        except NotFound as exc:
            return _error(404, str(exc))
        except VersionConflict as exc:
            return _error(409, str(exc))
        return _record_json(record)

    @app.delete(API + "/designs/{design_id}")
    async def delete_design(design_id: str):
        try:
            need_store().delete(design_id)
        except NotFound as exc:
            return _error(404, str(exc))
        return Response(status_code=204)

    @app.post(API + "/designs/{design_id}/ratings")
    async def rate_design(design_id: str, request: Request):
        store = need_store()
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError as exc:
            return _error(400, f"malformed body: {exc}")
        stars = body.get("stars") if isinstance(body, dict) else None
        try:
            record = store.rate(design_id, stars)
        except InvalidRating as exc:
            return _error(400, str(exc))
        except NotFound as exc:
            return _error(404, str(exc))
        return {"average": record.rating_average(), "count": len(record.ratings)}

    return app
