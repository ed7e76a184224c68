"""FastAPI service wrapping the tuning engine. The CLI is a thin client
of these endpoints; all computation happens here."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .config import ExperimentConfig, build_space
from .experiments import run_compare_experiment, run_tune_experiment

__all__ = ["app", "TuneRequest", "CompareRequest", "ValidateResponse"]

app = FastAPI(title="monotune", version=__version__)


class TuneRequest(BaseModel):
    config: ExperimentConfig


class TrialOut(BaseModel):
    phase: str
    iteration: int
    x_raw: list[float]
    y: float | None
    incumbent_y: float | None
    elapsed_seconds: float
    failed: bool


class TuneResponse(BaseModel):
    trials: list[TrialOut]
    summary: dict


class CompareRequest(BaseModel):
    config_a: ExperimentConfig
    config_b: ExperimentConfig
    repeats: int = Field(ge=1, default=1)


class CompareResponse(BaseModel):
    rows: list[dict]
    summary_rows: list[dict]


class DimensionOut(BaseModel):
    name: str
    lower: float
    upper: float
    scale: str
    monotonicity: int


class ValidateResponse(BaseModel):
    ok: bool
    task: str
    method: str
    seed: int
    normalized_space: list[DimensionOut]


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/tune", response_model=TuneResponse)
def tune(request: TuneRequest) -> TuneResponse:
    try:
        result = run_tune_experiment(request.config)
    except (ValueError, FileNotFoundError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return TuneResponse(**result)


@app.post("/compare", response_model=CompareResponse)
def compare(request: CompareRequest) -> CompareResponse:
    try:
        result = run_compare_experiment(
            request.config_a, request.config_b, request.repeats
        )
    except (ValueError, FileNotFoundError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return CompareResponse(**result)


@app.post("/validate", response_model=ValidateResponse)
def validate(request: TuneRequest) -> ValidateResponse:
    # the config itself was already validated by pydantic on the way in
    space = build_space(request.config)
    return ValidateResponse(
        ok=True,
        task=request.config.task,
        method=request.config.method,
        seed=request.config.seed,
        normalized_space=[
            DimensionOut(
                name=d.name,
                lower=d.lower,
                upper=d.upper,
                scale=d.scale,
                monotonicity=d.monotonicity,
            )
            for d in space.dimensions
        ],
    )
