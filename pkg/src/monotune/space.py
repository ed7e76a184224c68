"""Hyperparameter search space: raw bounds, linear or base-10 exponent
scaling, monotonicity annotations, and the normalization map to [0, 1]^D."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Dimension", "SearchSpace"]

SCALES = ("linear", "exp10")
MONOTONICITIES = (1, -1, 0)  # 0 means neutral


@dataclass(frozen=True)
class Dimension:
    """One search dimension.

    scale "linear" searches [lower, upper] directly; "exp10" means lower and
    upper are base-10 exponents and the raw hyperparameter is 10**value.
    monotonicity +1 marks a complexity-increasing dimension, -1 a
    complexity-decreasing one, 0 neutral (no sign observations emitted).
    """

    name: str
    lower: float
    upper: float
    scale: str = "linear"
    monotonicity: int = 0

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"dimension {self.name!r}: lower must be < upper")
        if self.scale not in SCALES:
            raise ValueError(f"dimension {self.name!r}: scale must be one of {SCALES}")
        if self.monotonicity not in MONOTONICITIES:
            raise ValueError(
                f"dimension {self.name!r}: monotonicity must be +1, -1 or 0 (neutral)"
            )


class SearchSpace:
    """Box search space with a strictly increasing per-dimension map between
    normalized coordinates in [0, 1] and raw hyperparameter units."""

    def __init__(self, dimensions: list[Dimension]):
        if not dimensions:
            raise ValueError("search space needs at least one dimension")
        self.dimensions = list(dimensions)

    @property
    def D(self) -> int:
        return len(self.dimensions)

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.dimensions]

    @property
    def monotonicity(self) -> np.ndarray:
        return np.array([d.monotonicity for d in self.dimensions], dtype=int)

    def to_raw(self, z: np.ndarray) -> np.ndarray:
        """Map normalized [0,1]^D coordinates to raw hyperparameter units.

        For exp10 dimensions the returned value is 10**(interpolated
        exponent), so normalization is linear in exponent space.
        """
        z = np.asarray(z, dtype=float)
        raw = np.empty_like(z)
        for i, dim in enumerate(self.dimensions):
            val = dim.lower + z[..., i] * (dim.upper - dim.lower)
            raw[..., i] = 10.0**val if dim.scale == "exp10" else val
        return raw

    def to_normalized(self, x_raw: np.ndarray) -> np.ndarray:
        z = np.asarray(x_raw, dtype=float)
        out = np.empty_like(z)
        for i, dim in enumerate(self.dimensions):
            val = np.log10(z[..., i]) if dim.scale == "exp10" else z[..., i]
            out[..., i] = (val - dim.lower) / (dim.upper - dim.lower)
        return out

    def contains_normalized(self, z: np.ndarray, tol: float = 1e-12) -> bool:
        z = np.asarray(z, dtype=float)
        return bool(np.all(z >= -tol) and np.all(z <= 1 + tol))

    def sample_normalized(self, rng: np.random.Generator, n: int = 1) -> np.ndarray:
        return rng.uniform(0.0, 1.0, size=(n, self.D))
