"""HyperTune orchestration: plain expected-improvement BO runs, the
subset stage whose averaged optimum anchors the virtual-sign sampling box,
virtual sign-point sampling on complexity dimensions, and the combined
main loop. Also the marginal-likelihood fit of the GP hyperparameters.

All randomness flows from a single integer seed through
``numpy.random.SeedSequence`` children, so runs are bitwise reproducible.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import cho_solve

from .acquisition import Incumbent, maximize_acquisition
from .ep import EPConfig, SignObservation, ValueObservation, ep_fit
from .kernel import KernelParams, cholesky_with_jitter, se_kernel_matrix
from .space import SearchSpace

__all__ = [
    "HyperTuneConfig",
    "Trial",
    "RunRecord",
    "TuningTask",
    "fit_gp_hyperparams",
    "run_bo",
    "subset_stage",
    "sample_virtual_points",
    "hypertune",
]

_LOG_2PI = math.log(2.0 * math.pi)
_FALLBACK_PARAMS = KernelParams(lengthscale=0.2, amplitude=1.0, noise=1e-4)


@dataclass(frozen=True)
class HyperTuneConfig:
    """Knobs of the two-stage tuning procedure."""

    T: int
    B: int = 5
    N: int = 10
    subset_fraction: float = 0.1
    subset_iters: int = 30
    init_points: int | None = None  # default max(5, 2D)
    v: float = 1e-6
    seed: int = 0
    acq_budget: int = 1000
    ep: EPConfig = field(default_factory=EPConfig)

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.B < 1:
            raise ValueError("B must be >= 1")
        if self.N < 0:
            raise ValueError("N must be >= 0")
        if not 0 < self.subset_fraction <= 1:
            raise ValueError("subset_fraction must be in (0, 1]")
        if self.init_points is not None and self.init_points < 2:
            raise ValueError("init_points must be >= 2")

    def resolved_init_points(self, D: int) -> int:
        return self.init_points if self.init_points is not None else max(5, 2 * D)


@dataclass
class Trial:
    phase: str  # "subset-<b>" or "main"
    iteration: int
    x_raw: tuple
    x_normalized: tuple
    y: float
    incumbent_y: float
    elapsed_seconds: float
    failed: bool = False


@dataclass
class RunRecord:
    """Ordered trial log of one optimization run (possibly two-phase)."""

    trials: list[Trial] = field(default_factory=list)
    averaged_optimum: tuple | None = None  # normalized coordinates
    sign_points: list[SignObservation] = field(default_factory=list)
    incumbent_x_raw: tuple | None = None
    incumbent_y: float = -math.inf
    subset_seconds: float = 0.0
    main_seconds: float = 0.0

    @property
    def total_seconds(self) -> float:
        return self.subset_seconds + self.main_seconds

    def main_trials(self) -> list[Trial]:
        return [t for t in self.trials if t.phase == "main"]


@dataclass
class TuningTask:
    """A tuning problem: a full-data objective, a factory of subsampled
    objectives (one per subset-stage run), and the search space.

    Objectives take raw-unit hyperparameter vectors and return validation
    performance in a bounded range; they must be deterministic given the
    vector (and the factory's seed).
    """

    full_objective: Callable[[np.ndarray], float]
    subset_objective_factory: Callable[[int, float, int], Callable[[np.ndarray], float]]
    space: SearchSpace
    description: str = ""
    true_optimum: float | None = None


def _log_marginal_likelihood(K: np.ndarray, y: np.ndarray, noise: float) -> float:
    p = len(y)
    try:
        L, _ = cholesky_with_jitter(K + noise * np.eye(p), 0.0)
    except Exception:
        return -np.inf
    a = cho_solve((L, True), y)
    return float(-0.5 * y @ a - np.sum(np.log(np.diag(L))) - 0.5 * p * _LOG_2PI)


_LOG_BOUNDS = {
    "lengthscale": (math.log(0.01), math.log(10.0)),
    "amplitude": (math.log(0.1), math.log(10.0)),
    "noise": (math.log(1e-6), math.log(1.0)),
}


def fit_gp_hyperparams(
    values: list[ValueObservation], space: SearchSpace | None = None
) -> KernelParams:
    """Maximize the exact GP log marginal likelihood over (lengthscale,
    amplitude, noise) in log space by multi-start coordinate search.

    Outputs are standardized to zero mean / unit variance before the fit;
    sign sites never participate. Deterministic (fixed starts, no RNG).
    """
    if len(values) < 2:
        raise ValueError("need at least 2 value observations to fit hyperparameters")
    X = np.array([np.asarray(o.x, dtype=float) for o in values])
    y = np.array([float(o.y) for o in values])
    sd = y.std()
    if sd < 1e-12:
        return _FALLBACK_PARAMS
    y = (y - y.mean()) / sd

    sq = np.sum(X**2, axis=1)[:, None] + np.sum(X**2, axis=1)[None, :] - 2 * X @ X.T
    np.maximum(sq, 0.0, out=sq)

    def nll(logs: np.ndarray) -> float:
        theta, amp, noise = np.exp(logs)
        K = amp * np.exp(-0.5 * sq / theta)
        return -_log_marginal_likelihood(K, y, noise)

    starts = [
        np.array([math.log(t), 0.0, math.log(nz)])
        for t in (0.05, 0.2, 1.0, 3.0)
        for nz in (1e-4, 1e-2)
    ]
    lo = np.array([_LOG_BOUNDS[k][0] for k in ("lengthscale", "amplitude", "noise")])
    hi = np.array([_LOG_BOUNDS[k][1] for k in ("lengthscale", "amplitude", "noise")])

    best_logs, best_val = None, np.inf
    for start in starts:
        logs = start.copy()
        val = nll(logs)
        step = 1.0
        while step > 0.02:
            improved = False
            for k in range(3):
                for delta in (step, -step):
                    cand = logs.copy()
                    cand[k] = min(max(cand[k] + delta, lo[k]), hi[k])
                    cv = nll(cand)
                    if cv < val - 1e-12:
                        logs, val = cand, cv
                        improved = True
                        break
            if not improved:
                step *= 0.5
        if val < best_val:
            best_logs, best_val = logs, val
    if best_logs is None or not np.isfinite(best_val):
        return _FALLBACK_PARAMS
    theta, amp, noise = np.exp(best_logs)
    return KernelParams(lengthscale=float(theta), amplitude=float(amp), noise=float(noise))


def _standardize(ys: np.ndarray) -> tuple[np.ndarray, float, float]:
    mean = float(ys.mean())
    sd = float(ys.std())
    if sd < 1e-12:
        sd = 1.0
    return (ys - mean) / sd, mean, sd


def run_bo(
    objective: Callable[[np.ndarray], float],
    space: SearchSpace,
    iters: int,
    signs: list[SignObservation],
    config: HyperTuneConfig,
    rng: np.random.Generator,
    phase: str = "main",
    time_offset: float = 0.0,
    max_evals: int | None = None,
    time_budget: float | None = None,
) -> RunRecord:
    """Bayesian optimization with EI over an EP surrogate conditioned on
    the given sign observations (plain-EI baseline when signs is empty).

    GP hyperparameters are refit from value observations every iteration;
    outputs are standardized per fit, which leaves sign observations valid
    (positive affine maps of f preserve derivative signs). Failed objective
    evaluations are logged with y = -inf and excluded from the surrogate.
    ``max_evals`` / ``time_budget`` cap the run for budget-parity
    comparisons, whichever exhausts first.
    """
    record = RunRecord()
    start_time = time.perf_counter()
    xs_norm: list[np.ndarray] = []
    ys: list[float] = []
    n_evals = 0

    def exhausted() -> bool:
        if max_evals is not None and n_evals >= max_evals:
            return True
        if time_budget is not None and time.perf_counter() - start_time >= time_budget:
            return True
        return False

    def evaluate(z: np.ndarray, iteration: int) -> None:
        nonlocal n_evals
        x_raw = space.to_raw(z)
        failed = False
        try:
            y = float(objective(x_raw))
            if not np.isfinite(y):
                raise ValueError(f"objective returned non-finite value {y}")
        except Exception:
            y = -math.inf
            failed = True
        n_evals += 1
        if not failed:
            xs_norm.append(z.copy())
            ys.append(y)
            if y > record.incumbent_y:
                record.incumbent_y = y
                record.incumbent_x_raw = tuple(float(a) for a in x_raw)
        record.trials.append(
            Trial(
                phase=phase,
                iteration=iteration,
                x_raw=tuple(float(a) for a in x_raw),
                x_normalized=tuple(float(a) for a in z),
                y=y,
                incumbent_y=record.incumbent_y,
                elapsed_seconds=time_offset + time.perf_counter() - start_time,
                failed=failed,
            )
        )

    n_init = config.resolved_init_points(space.D)
    Z0 = space.sample_normalized(rng, n_init)
    for i in range(n_init):
        if exhausted():
            break
        evaluate(Z0[i], iteration=i - n_init)

    for t in range(iters):
        if exhausted():
            break
        if len(ys) >= 2:
            values_raw = [ValueObservation(tuple(x), y) for x, y in zip(xs_norm, ys)]
            params = fit_gp_hyperparams(values_raw)
            y_std, _, _ = _standardize(np.array(ys))
            values = [ValueObservation(tuple(x), y) for x, y in zip(xs_norm, y_std)]
            state = ep_fit(values, signs, params, v=config.v, config=config.ep)
            incumbent = Incumbent(
                x_best=tuple(xs_norm[int(np.argmax(ys))]), y_best=float(y_std.max())
            )
            z_next = maximize_acquisition(
                state, space, incumbent, budget=config.acq_budget, rng=rng
            )
        else:
            z_next = space.sample_normalized(rng, 1)[0]
        evaluate(z_next, iteration=t)

    record.main_seconds = time.perf_counter() - start_time
    return record


def subset_stage(
    task: TuningTask, config: HyperTuneConfig, rng: np.random.Generator
) -> tuple[np.ndarray, list[RunRecord]]:
    """Run B independent plain-EI BO runs on distinct data subsets and
    average their per-run argmax points in normalized coordinates.

    The runs could execute in parallel; the budget ledger charges their
    sequential sum regardless.
    """
    if config.B < 1:
        raise ValueError("B must be >= 1")
    seeds = rng.integers(0, 2**63 - 1, size=config.B)
    records = []
    optima = []
    for b in range(config.B):
        sub_rng = np.random.default_rng(int(seeds[b]))
        objective = task.subset_objective_factory(
            b, config.subset_fraction, int(seeds[b])
        )
        rec = run_bo(
            objective,
            task.space,
            config.subset_iters,
            signs=[],
            config=config,
            rng=sub_rng,
            phase=f"subset-{b}",
        )
        if rec.incumbent_x_raw is None:
            raise RuntimeError(f"subset run {b} produced no successful evaluation")
        optima.append(task.space.to_normalized(np.array(rec.incumbent_x_raw)))
        records.append(rec)
    xbar = np.mean(np.array(optima), axis=0)
    return xbar, records


def sample_virtual_points(
    space: SearchSpace,
    xbar: np.ndarray,
    N: int,
    rng: np.random.Generator,
) -> list[SignObservation]:
    """Draw N virtual points with each normalized coordinate uniform in
    [0, xbar_d] and emit one sign observation per non-neutral dimension,
    carrying that dimension's monotonicity annotation."""
    if N < 0:
        raise ValueError("N must be >= 0")
    xbar = np.asarray(xbar, dtype=float)
    if not space.contains_normalized(xbar):
        raise ValueError("averaged optimum lies outside the normalized box")
    mono = space.monotonicity
    if N == 0 or not np.any(mono != 0):
        return []
    points = rng.uniform(0.0, 1.0, size=(N, space.D)) * xbar[None, :]
    signs = []
    for i in range(N):
        for d in range(space.D):
            if mono[d] != 0:
                signs.append(
                    SignObservation(tuple(float(a) for a in points[i]), d, int(mono[d]))
                )
    return signs


def hypertune(
    task: TuningTask, config: HyperTuneConfig, rng: np.random.Generator | None = None
) -> RunRecord:
    """Two-stage tuning: subset-stage BO runs, averaged optimum, virtual
    sign points on complexity dimensions, then the main BO loop on the
    full-data objective conditioned on those signs.

    With an all-neutral space the main phase is trial-for-trial identical
    to a plain EI run under the same seed.
    """
    ss = np.random.SeedSequence(config.seed)
    subset_seq, virtual_seq, main_seq = ss.spawn(3)
    subset_rng = np.random.default_rng(subset_seq)
    start = time.perf_counter()
    xbar, subset_records = subset_stage(task, config, subset_rng)
    subset_seconds = time.perf_counter() - start

    signs = sample_virtual_points(
        task.space, xbar, config.N, np.random.default_rng(virtual_seq)
    )

    main = run_bo(
        task.full_objective,
        task.space,
        config.T,
        signs,
        config,
        np.random.default_rng(main_seq),
        phase="main",
        time_offset=subset_seconds,
    )

    record = RunRecord(
        averaged_optimum=tuple(float(a) for a in xbar),
        sign_points=signs,
        incumbent_x_raw=main.incumbent_x_raw,
        incumbent_y=main.incumbent_y,
        subset_seconds=subset_seconds,
        main_seconds=main.main_seconds,
    )
    offset = 0.0
    for rec in subset_records:
        for t in rec.trials:
            record.trials.append(
                Trial(t.phase, t.iteration, t.x_raw, t.x_normalized, t.y,
                      t.incumbent_y, offset + t.elapsed_seconds, t.failed)
            )
        offset += rec.main_seconds
    record.trials.extend(main.trials)
    return record


def run_plain_ei(
    task: TuningTask,
    config: HyperTuneConfig,
    seed: int,
    max_evals: int | None = None,
    time_budget: float | None = None,
    iters: int | None = None,
) -> RunRecord:
    """Plain-EI baseline on the full-data objective under the same seeding
    scheme as hypertune's main phase."""
    ss = np.random.SeedSequence(seed)
    _, _, main_seq = ss.spawn(3)
    return run_bo(
        task.full_objective,
        task.space,
        iters if iters is not None else config.T,
        signs=[],
        config=config,
        rng=np.random.default_rng(main_seq),
        phase="main",
        max_evals=max_evals,
        time_budget=time_budget,
    )
