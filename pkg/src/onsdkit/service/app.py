"""HTTP face of the measurement pipeline."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from ..errors import ConfigError, IngestionError, StageError
from . import handlers
from .models import (
    AgreementReportModel,
    EvaluateRequest,
    HealthResponse,
    MeasureRequest,
    MeasurementReportModel,
    PhantomRequest,
    PhantomResponse,
)


def _http_error(exc: Exception) -> HTTPException:
    if isinstance(exc, IngestionError):
        return HTTPException(400, detail={"kind": "input", "message": str(exc)})
    if isinstance(exc, ConfigError):
        return HTTPException(400, detail={"kind": "config", "message": str(exc)})
    if isinstance(exc, StageError):
        return HTTPException(
            422,
            detail={"kind": "pipeline", "stage": exc.stage, "message": str(exc)},
        )
    return HTTPException(422, detail={"kind": "pipeline", "message": str(exc)})


def create_app() -> FastAPI:
    app = FastAPI(
        title="onsdkit",
        description="Automated optic nerve sheath diameter measurement",
        version=handlers.service_version(),
    )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=handlers.service_version())

    @app.post("/measure", response_model=MeasurementReportModel)
    def measure(request: MeasureRequest) -> MeasurementReportModel:
        try:
            return handlers.handle_measure(request)
        except (IngestionError, ConfigError, StageError, ValueError) as exc:
            raise _http_error(exc) from exc

    @app.post("/phantom", response_model=PhantomResponse)
    def phantom(request: PhantomRequest) -> PhantomResponse:
        try:
            return handlers.handle_phantom(request)
        except (IngestionError, ConfigError, ValueError) as exc:
            raise _http_error(exc) from exc

    @app.post("/evaluate", response_model=AgreementReportModel)
    def evaluate(request: EvaluateRequest) -> AgreementReportModel:
        try:
            return handlers.handle_evaluate(request)
        except (IngestionError, ValueError) as exc:
            raise _http_error(exc) from exc

    return app


app = create_app()
