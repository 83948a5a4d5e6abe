"""HTTP surface: masked prediction, batching, health.

POST /v1/masked_predict  one masked query -> candidate probabilities
POST /v1/batch           up to max_batch queries, order preserving
GET  /healthz            {status, model_id}

Requests never mutate server state. Errors: 400 malformed schema or query
semantics, 413 sequence or batch too large, 503 model not ready.
"""

from __future__ import annotations

import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .config import Settings
from .model import BadQuery, MaskedLanguageModel, SequenceTooLong

log = logging.getLogger("oracle_service")


class MaskedPredictRequest(BaseModel):
    tokens: list[str] = Field(min_length=1)
    target_position: int
    candidates: list[str] | None = None


class MaskedPredictResponse(BaseModel):
    probabilities: dict[str, float]
    model_id: str
    tokenization_note: dict[str, int]


def create_app(
    model: MaskedLanguageModel | None = None, settings: Settings | None = None
) -> FastAPI:
    settings = settings or Settings.from_env()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if app.state.model is None:
            try:
                log.info("loading masked-LM %s", settings.model_id)
                app.state.model = MaskedLanguageModel.load(
                    settings.model_id,
                    max_sequence_length=settings.max_sequence_length,
                    device=settings.device,
                )
            except Exception as exc:  # stay up, report unready
                app.state.load_error = str(exc)
                log.error("model load failed: %s", exc)
        yield

    app = FastAPI(title="oracle-service", version="0.1.0", lifespan=lifespan)
    app.state.model = model
    app.state.settings = settings
    app.state.load_error = None

    @app.exception_handler(RequestValidationError)
    async def schema_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    def ready_model() -> MaskedLanguageModel:
        if app.state.model is None:
            raise HTTPException(
                status_code=503,
                detail=app.state.load_error or "model not loaded yet",
            )
        return app.state.model

    def run_predict(request: MaskedPredictRequest) -> MaskedPredictResponse:
        mlm = ready_model()
        try:
            result = mlm.predict(
                request.tokens, request.target_position, request.candidates
            )
        except BadQuery as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except SequenceTooLong as exc:
            raise HTTPException(status_code=413, detail=str(exc)) from exc
        return MaskedPredictResponse(
            probabilities=result.probabilities,
            model_id=mlm.model_id,
            tokenization_note=result.fanout,
        )

    @app.post("/v1/masked_predict", response_model=MaskedPredictResponse)
    def masked_predict(request: MaskedPredictRequest) -> MaskedPredictResponse:
        return run_predict(request)

    @app.post("/v1/batch", response_model=list[MaskedPredictResponse])
    def batch(requests: list[MaskedPredictRequest]) -> list[MaskedPredictResponse]:
        if len(requests) > settings.max_batch_size:
            raise HTTPException(
                status_code=413,
                detail=f"batch of {len(requests)} exceeds {settings.max_batch_size}",
            )
        return [run_predict(r) for r in requests]

    @app.get("/healthz")
    def healthz():
        if app.state.model is None:
            return JSONResponse(
                status_code=503,
                content={"status": "unavailable", "model_id": settings.model_id},
            )
        return {"status": "ok", "model_id": app.state.model.model_id}

    return app
