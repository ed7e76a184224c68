"""Benchmark objectives: the synthetic complexity-shift family (a
small-data curve peaking early and a full-data curve rising monotonically
to a later saturation) and the elastic-net tuning task on a bundled
dataset. Objectives are deterministic given (x, seed)."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .datasets import Dataset, bundled_dataset_path, load_csv_dataset, split_dataset, subsample
from .elastic_net import OptimizerConfig, accuracy, train_elastic_net
from .engine import TuningTask
from .space import Dimension, SearchSpace

__all__ = [
    "SyntheticComplexityParams",
    "synthetic_objective",
    "make_synthetic_task",
    "make_elastic_net_task",
    "elastic_net_space",
]


@dataclass(frozen=True)
class SyntheticComplexityParams:
    """Shape parameters of the complexity-shift family along dimension 1
    (the complexity axis, normalized to [0, 1])."""

    c_small: float = 0.4
    c_big: float = 0.8
    noise_sd: float = 0.0
    decay: float = 12.0

    def __post_init__(self):
        if not 0 < self.c_small < self.c_big < 1:
            raise ValueError("need 0 < c_small < c_big < 1")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")


def _point_noise(x: np.ndarray, seed: int, sd: float) -> float:
    """Deterministic per-(x, seed) Gaussian noise."""
    if sd == 0:
        return 0.0
    digest = hashlib.sha256(np.asarray(x, dtype=float).tobytes() + seed.to_bytes(8, "little", signed=True)).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    return float(rng.normal(scale=sd))


def _nuisance(x: np.ndarray) -> float:
    # mild quadratic pull toward 0.5 on non-complexity dimensions
    return -0.05 * float(np.sum((np.asarray(x[1:]) - 0.5) ** 2))


def synthetic_objective(
    params: SyntheticComplexityParams, regime: str, seed: int = 0
):
    """Objective over normalized x in [0,1]^D, dimension 1 the complexity
    axis.

    full  : logistic rise saturating past c_big, values in [0.2, 0.9].
    small : bump peaking at c_small, decaying at rate ``decay``.
    """
    if regime not in ("small", "full"):
        raise ValueError(f"regime must be 'small' or 'full', got {regime!r}")

    def full_curve(x1: float) -> float:
        return 0.2 + 0.7 / (1.0 + math.exp(-12.0 * (x1 - params.c_big)))

    def small_curve(x1: float) -> float:
        return 0.2 + 0.6 * math.exp(-params.decay * (x1 - params.c_small) ** 2)

    curve = full_curve if regime == "full" else small_curve

    def objective(x: np.ndarray) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return curve(float(x[0])) + _nuisance(x) + _point_noise(x, seed, params.noise_sd)

    return objective


def make_synthetic_task(
    params: SyntheticComplexityParams = SyntheticComplexityParams(),
    D: int = 2,
    seed: int = 0,
) -> TuningTask:
    """Complexity-shift tuning task: full-regime objective for the main
    loop, independently seeded small-regime objectives per subset run."""
    dims = [Dimension("complexity", 0.0, 1.0, "linear", +1)]
    dims += [Dimension(f"nuisance{i}", 0.0, 1.0, "linear", 0) for i in range(1, D)]
    space = SearchSpace(dims)

    full = synthetic_objective(params, "full", seed=seed)

    def subset_factory(b: int, fraction: float, sub_seed: int):
        return synthetic_objective(params, "small", seed=sub_seed)

    # optimum of the full regime: complexity axis at 1, nuisance at 0.5
    true_opt = 0.2 + 0.7 / (1.0 + math.exp(-12.0 * (1.0 - params.c_big)))
    return TuningTask(
        full_objective=full,
        subset_objective_factory=subset_factory,
        space=space,
        description=f"synthetic complexity shift (c_small={params.c_small}, c_big={params.c_big}, D={D})",
        true_optimum=true_opt,
    )


def elastic_net_space() -> SearchSpace:
    """ratio in [0,1] (neutral), penalty magnitude in exponent space
    [-7,-1] with sign -1: larger penalty means a simpler model."""
    return SearchSpace(
        [
            Dimension("ratio", 0.0, 1.0, "linear", 0),
            Dimension("alpha", -7.0, -1.0, "exp10", -1),
        ]
    )


@dataclass
class ElasticNetTask:
    train: Dataset
    valid: Dataset
    heldout: Dataset

    def objective_on(self, train: Dataset, valid: Dataset):
        cfg = OptimizerConfig()

        def objective(x_raw: np.ndarray) -> float:
            ratio = float(x_raw[0])
            alpha_exponent = float(np.log10(x_raw[1]))
            model = train_elastic_net(train, ratio, alpha_exponent, cfg)
            return accuracy(model, valid)

        return objective

    def heldout_error(self, x_raw: np.ndarray) -> float:
        ratio = float(x_raw[0])
        alpha_exponent = float(np.log10(x_raw[1]))
        model = train_elastic_net(self.train, ratio, alpha_exponent)
        return 1.0 - accuracy(model, self.heldout)


def make_elastic_net_task(
    dataset: Dataset | None = None,
    seed: int = 0,
    subset_row_cap: int = 2000,
) -> tuple[TuningTask, ElasticNetTask]:
    """Elastic-net tuning task on a binary-classification dataset
    (bundled one by default). The subset stage trains on seeded row
    subsamples of the training split, capped at ``subset_row_cap`` rows,
    and validates on the full validation split."""
    if dataset is None:
        dataset = load_csv_dataset(bundled_dataset_path())
    train, valid, heldout = split_dataset(dataset, seed=seed)
    helper = ElasticNetTask(train, valid, heldout)

    def subset_factory(b: int, fraction: float, sub_seed: int):
        eff = min(fraction, subset_row_cap / train.n)
        sub = subsample(train, eff, sub_seed)
        return helper.objective_on(sub, valid)

    task = TuningTask(
        full_objective=helper.objective_on(train, valid),
        subset_objective_factory=subset_factory,
        space=elastic_net_space(),
        description=f"elastic-net logistic regression (n={dataset.n}, F={dataset.F})",
    )
    return task, helper
