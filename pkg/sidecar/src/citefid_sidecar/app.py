"""FastAPI application implementing the scoring wire protocol.

    POST /v1/score               {"pairs":[{"a":...,"b":...}]} -> {"scores":[...]}
    POST /v1/classify/background {"sentences":[...]} -> {"labels":[...],"confidences":[...]}
    POST /v1/classify/discourse  {"sentences":[...]} -> {"labels":[...],"confidences":[...]}
    GET  /v1/health              -> {"status":"ok","model":...,"version":...}

Responses preserve input order. Scores are clamped to [1, 5] and confidences
to [0, 1] at this boundary. Oversized batches get 413, malformed bodies 400,
model failures 500 with an error id.
"""

from __future__ import annotations

import uuid

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .models import SCORE_MAX, SCORE_MIN, ModelBundle

BACKGROUND_THRESHOLD = 0.5


class PairItem(BaseModel):
    a: str
    b: str


class ScoreRequest(BaseModel):
    pairs: list[PairItem]


class ScoreResponse(BaseModel):
    scores: list[float]


class ClassifyRequest(BaseModel):
    sentences: list[str]


class BackgroundResponse(BaseModel):
    labels: list[bool]
    confidences: list[float]


class DiscourseResponse(BaseModel):
    labels: list[str]
    confidences: list[float]


class HealthResponse(BaseModel):
    status: str
    model: str
    version: str


def _clamp(value: float, lo: float, hi: float) -> float:
    return min(hi, max(lo, value))


def create_app(bundle: ModelBundle) -> FastAPI:
    app = FastAPI(title="citefid-sidecar", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": "malformed_request", "detail": str(exc.errors()[:3])},
        )

    @app.exception_handler(Exception)
    async def model_failure(request: Request, exc: Exception):
        return JSONResponse(
            status_code=500,
            content={"error": "model_failure", "id": uuid.uuid4().hex},
        )

    def batch_too_large(n: int) -> JSONResponse | None:
        if n > bundle.max_batch:
            return JSONResponse(
                status_code=413,
                content={"error": "batch_too_large", "max": bundle.max_batch},
            )
        return None

    @app.get("/v1/health", response_model=HealthResponse)
    async def health():
        return HealthResponse(status="ok", model=bundle.name, version=bundle.version)

    @app.post("/v1/score", response_model=ScoreResponse)
    async def score(request: ScoreRequest):
        oversized = batch_too_large(len(request.pairs))
        if oversized:
            return oversized
        raw = bundle.score([(p.a, p.b) for p in request.pairs])
        return ScoreResponse(scores=[_clamp(v, SCORE_MIN, SCORE_MAX) for v in raw])

    @app.post("/v1/classify/background", response_model=BackgroundResponse)
    async def classify_background(request: ClassifyRequest):
        oversized = batch_too_large(len(request.sentences))
        if oversized:
            return oversized
        raw = bundle.background_confidences(request.sentences)
        confidences = [_clamp(v, 0.0, 1.0) for v in raw]
        return BackgroundResponse(
            labels=[c >= BACKGROUND_THRESHOLD for c in confidences],
            confidences=confidences,
        )

    @app.post("/v1/classify/discourse", response_model=DiscourseResponse)
    async def classify_discourse(request: ClassifyRequest):
        oversized = batch_too_large(len(request.sentences))
        if oversized:
            return oversized
        raw = bundle.discourse(request.sentences)
        return DiscourseResponse(
            labels=[label for label, _ in raw],
            confidences=[_clamp(conf, 0.0, 1.0) for _, conf in raw],
        )

    return app
