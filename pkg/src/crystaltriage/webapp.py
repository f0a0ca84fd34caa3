"""HTTP facade over the triage service.

All bodies are JSON; errors come back as {"code", "message"} with a
matching status. Every route except the health probe requires the static
bearer token from configuration.
"""

from __future__ import annotations

import json
from typing import Optional

from fastapi import Depends, FastAPI, File, Header, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse
from pydantic import BaseModel

from . import imgio
from .corpus import LABELS, ManifestError, label_by_name
from .service import (BadImageError, BadRequestError, NoAnnotationsError,
                      ServiceConfig, ServiceError, TriageService,
                      UnknownRecordError)


class UnauthorizedError(ServiceError):
    code = "unauthorized"


_HTTP_STATUS = (
    (UnauthorizedError, 401),
    (UnknownRecordError, 404),
    (BadRequestError, 400),
    (BadImageError, 400),
    (NoAnnotationsError, 409),
)


class AnnotationBody(BaseModel):
    record_id: str
    action: str
    reviewer: str
    label: Optional[str] = None
    idempotency_key: Optional[str] = None


def create_app(service: TriageService, auth_token: str) -> FastAPI:
    app = FastAPI(title="crystal triage", docs_url=None, redoc_url=None)

    def error(status: int, code: str, message: str) -> JSONResponse:
        return JSONResponse(status_code=status,
                            content={"code": code, "message": message})

    @app.exception_handler(ServiceError)
    async def on_service_error(request: Request, exc: ServiceError):
        for cls, status in _HTTP_STATUS:
            if isinstance(exc, cls):
                return error(status, exc.code, str(exc))
        return error(500, exc.code, str(exc))

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request,
                                  exc: RequestValidationError):
        return error(400, "bad_request", str(exc))

    async def require_auth(authorization: Optional[str] = Header(None)):
        if authorization != f"Bearer {auth_token}":
            raise UnauthorizedError("missing or invalid bearer token")

    authed = [Depends(require_auth)]

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "items": len(service),
                "events": service.event_count,
                "checkpoint": service.checkpoint_digest}

    @app.get("/labels", dependencies=authed)
    async def labels():
        return {"labels": [{"id": l.id, "name": l.name,
                            "is_crystal": l.is_crystal} for l in LABELS]}

    @app.post("/images", dependencies=authed)
    async def ingest_images(files: list[UploadFile] = File(...)):
        items = []
        for upload in files:
            data = await upload.read()
            try:
                pixels = imgio.decode_rgb(data)
            except ValueError:
                raise BadImageError(f"cannot decode {upload.filename!r}")
            items.append(service.ingest_pixels(pixels))
        return {"item_ids": [i.record_id for i in items],
                "items": [i.to_json() for i in items]}

    @app.get("/items/{record_id}", dependencies=authed)
    async def get_item(record_id: str):
        return service.get(record_id).to_json()

    @app.get("/items/{record_id}/image", dependencies=authed)
    async def get_item_image(record_id: str):
        item = service.get(record_id)
        return FileResponse(item.image_path, media_type="image/png")

    @app.get("/queue", dependencies=authed)
    async def queue(strategy: str = "top1", status: Optional[str] = None,
                    offset: int = 0, limit: int = 50):
        page, total = service.queue(strategy, status, offset, limit)
        return {"strategy": strategy, "status": status, "offset": offset,
                "limit": limit, "total": total,
                "items": [i.to_json() for i in page]}

    @app.post("/annotations", dependencies=authed)
    async def annotate(body: AnnotationBody):
        label = None
        if body.label is not None:
            try:
                label = label_by_name(body.label)
            except ManifestError:
                raise BadRequestError(f"unknown label {body.label!r}")
        item = service.annotate(body.record_id, body.action, body.reviewer,
                                label=label,
                                idempotency_key=body.idempotency_key)
        return item.to_json()

    @app.get("/reports/live", dependencies=authed)
    async def live_report():
        return service.metrics_report().to_json()

    @app.get("/export/events", dependencies=authed)
    async def export_events():
        lines = [json.dumps(e.to_json()) for e in service.events()]
        return PlainTextResponse("\n".join(lines) + ("\n" if lines else ""),
                                 media_type="application/x-ndjson")

    @app.get("/export/manifest", dependencies=authed)
    async def export_manifest():
        manifest = service.export_manifest()
        lines = [json.dumps(r.to_json()) for r in manifest.records]
        return PlainTextResponse("\n".join(lines) + ("\n" if lines else ""),
                                 media_type="application/x-ndjson")

    return app


def serve(config: ServiceConfig) -> None:
    """Blocking entry point: build the service from a checkpoint and run."""
    import uvicorn

    service = TriageService.from_checkpoint(config.data_dir,
                                            config.checkpoint_path)
    app = create_app(service, config.auth_token)
    host, port = config.host_port()
    uvicorn.run(app, host=host, port=port, log_level="warning")
