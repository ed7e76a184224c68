"""Expected-improvement acquisition and its derivative-free maximizer over
the normalized search box."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .ep import EPState, ep_predict_batch
from .space import SearchSpace

__all__ = ["Incumbent", "expected_improvement", "expected_improvement_batch",
           "maximize_acquisition"]

_SIGMA_FLOOR = 1e-12


@dataclass(frozen=True)
class Incumbent:
    """Best observed validation performance so far. Only value observations
    contribute; sign observations never do."""

    x_best: tuple
    y_best: float


def expected_improvement(mean: float, variance: float, incumbent: Incumbent) -> float:
    """Closed-form EI of a Gaussian (mean, variance) over the incumbent."""
    if variance < -1e-9:
        raise ValueError(f"negative variance {variance}")
    variance = max(variance, 0.0)
    sigma = math.sqrt(variance)
    gap = mean - incumbent.y_best
    if sigma <= _SIGMA_FLOOR:
        return max(gap, 0.0)
    z = gap / sigma
    return float(gap * norm.cdf(z) + sigma * norm.pdf(z))


def expected_improvement_batch(
    means: np.ndarray, variances: np.ndarray, incumbent: Incumbent
) -> np.ndarray:
    """Vectorized EI; degenerate (sigma ~ 0) entries fall back to
    max(mean - y_best, 0)."""
    variances = np.maximum(np.asarray(variances, dtype=float), 0.0)
    sigma = np.sqrt(variances)
    gap = np.asarray(means, dtype=float) - incumbent.y_best
    out = np.maximum(gap, 0.0)
    ok = sigma > _SIGMA_FLOOR
    z = np.zeros_like(sigma)
    np.divide(gap, sigma, out=z, where=ok)
    ei = gap * norm.cdf(z) + sigma * norm.pdf(z)
    out[ok] = np.maximum(ei[ok], 0.0)
    return out


def _ei_at(model: EPState, Z: np.ndarray, incumbent: Incumbent) -> np.ndarray:
    means, variances = ep_predict_batch(model, Z)
    return expected_improvement_batch(means, variances, incumbent)


def maximize_acquisition(
    model: EPState,
    space: SearchSpace,
    incumbent: Incumbent,
    budget: int = 1000,
    rng: np.random.Generator | None = None,
    refine_evals: int = 50,
) -> np.ndarray:
    """Maximize EI by seeded random search plus coordinate-wise pattern
    search refinement. Returns a normalized point inside the box;
    deterministic given the generator state. Ties in the candidate scan
    break toward the lowest index.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    Z = space.sample_normalized(rng, budget)
    ei = _ei_at(model, Z, incumbent)
    best_i = int(np.argmax(ei))  # argmax takes the first maximum
    best = Z[best_i].copy()
    best_ei = float(ei[best_i])

    # shrinking-step pattern search around the best candidate
    step = 0.1
    evals = 0
    D = space.D
    while evals < refine_evals and step > 1e-4:
        improved = False
        for d in range(D):
            if evals >= refine_evals:
                break
            trial = np.repeat(best[None, :], 2, axis=0)
            trial[0, d] = min(best[d] + step, 1.0)
            trial[1, d] = max(best[d] - step, 0.0)
            vals = _ei_at(model, trial, incumbent)
            evals += 2
            j = int(np.argmax(vals))
            if vals[j] > best_ei:
                best_ei = float(vals[j])
                best = trial[j].copy()
                improved = True
        if not improved:
            step *= 0.5
    return best
