"""Experiment configuration schema (pydantic) and construction of tuning
tasks from validated configs."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from .engine import HyperTuneConfig, TuningTask
from .objectives import (
    SyntheticComplexityParams,
    make_elastic_net_task,
    make_synthetic_task,
)
from .space import Dimension, SearchSpace

__all__ = ["DimensionConfig", "SyntheticParamsConfig", "ExperimentConfig",
           "build_space", "build_task", "build_engine_config"]


class DimensionConfig(BaseModel):
    name: str
    lower: float
    upper: float
    scale: Literal["linear", "exp10"] = "linear"
    monotonicity: int | Literal["neutral"] = 0

    @field_validator("monotonicity")
    @classmethod
    def _check_monotonicity(cls, v):
        if v == "neutral":
            return 0
        if v in (1, -1, 0):
            return v
        raise ValueError("monotonicity must be +1, -1 or \"neutral\"")

    @model_validator(mode="after")
    def _check_bounds(self):
        if not self.lower < self.upper:
            raise ValueError(f"dimension {self.name!r}: lower must be < upper")
        return self


class SyntheticParamsConfig(BaseModel):
    c_small: float = 0.4
    c_big: float = 0.8
    noise_sd: float = 0.0
    decay: float = 12.0


class ExperimentConfig(BaseModel):
    """One tuning experiment. ``seed`` is mandatory: there is no
    wall-clock default, so identical configs give identical runs."""

    task: Literal["synthetic", "elastic_net"]
    method: Literal["hypertune", "ei"]
    space: list[DimensionConfig]
    seed: int
    T: int = Field(ge=1, default=30)
    B: int = Field(ge=1, default=5)
    N: int = Field(ge=0, default=10)
    subset_fraction: float = Field(gt=0, le=1, default=0.1)
    subset_iters: int = Field(ge=1, default=30)
    init_points: Optional[int] = Field(ge=2, default=None)
    v: float = Field(gt=0, default=1e-6)
    acq_budget: int = Field(ge=1, default=1000)
    dataset_path: Optional[str] = None
    synthetic_params: SyntheticParamsConfig = Field(default_factory=SyntheticParamsConfig)
    output_dir: str = "."

    @model_validator(mode="after")
    def _check_space_names(self):
        names = [d.name for d in self.space]
        if self.task == "elastic_net":
            if names != ["ratio", "alpha"]:
                raise ValueError(
                    f"space: elastic_net expects dimensions ['ratio', 'alpha'], got {names}"
                )
        else:
            expected = ["complexity"] + [f"nuisance{i}" for i in range(1, len(names))]
            if names != expected:
                raise ValueError(
                    f"space: synthetic expects dimensions {expected}, got {names}"
                )
        return self


def build_space(config: ExperimentConfig) -> SearchSpace:
    return SearchSpace(
        [
            Dimension(d.name, d.lower, d.upper, d.scale, int(d.monotonicity))
            for d in config.space
        ]
    )


def build_task(config: ExperimentConfig):
    """Returns (task, elastic_net_helper_or_None); the declared space
    replaces the task's default space so bounds and signs come from the
    config."""
    if config.task == "synthetic":
        sp = config.synthetic_params
        task = make_synthetic_task(
            SyntheticComplexityParams(sp.c_small, sp.c_big, sp.noise_sd, sp.decay),
            D=len(config.space),
            seed=config.seed,
        )
        helper = None
    else:
        from .datasets import load_csv_dataset

        dataset = load_csv_dataset(config.dataset_path) if config.dataset_path else None
        task, helper = make_elastic_net_task(dataset, seed=config.seed)
    task = TuningTask(
        full_objective=task.full_objective,
        subset_objective_factory=task.subset_objective_factory,
        space=build_space(config),
        description=task.description,
        true_optimum=task.true_optimum,
    )
    return task, helper


def build_engine_config(config: ExperimentConfig) -> HyperTuneConfig:
    return HyperTuneConfig(
        T=config.T,
        B=config.B,
        N=config.N,
        subset_fraction=config.subset_fraction,
        subset_iters=config.subset_iters,
        init_points=config.init_points,
        v=config.v,
        seed=config.seed,
        acq_budget=config.acq_budget,
    )
