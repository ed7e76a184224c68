"""Elastic-net logistic regression trained by proximal gradient descent
(ISTA with soft-thresholding on the L1 part). Deterministic from zero
initialization; the intercept is never penalized."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import Dataset

__all__ = ["OptimizerConfig", "ElasticNetModel", "train_elastic_net", "accuracy"]


@dataclass(frozen=True)
class OptimizerConfig:
    max_iters: int = 500
    grad_tol: float = 1e-6
    track_loss: bool = False


@dataclass
class ElasticNetModel:
    weights: np.ndarray
    intercept: float
    mean: np.ndarray  # training-split standardization statistics
    std: np.ndarray
    losses: list | None = None

    def decision(self, X: np.ndarray) -> np.ndarray:
        Z = (X - self.mean) / self.std
        return Z @ self.weights + self.intercept

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.decision(X) > 0).astype(int)


def _sigmoid(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _log1pexp(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    big = t > 30
    out[big] = t[big]
    out[~big] = np.log1p(np.exp(t[~big]))
    return out


def train_elastic_net(
    train: Dataset,
    ratio: float,
    alpha_exponent: float,
    optimizer_config: OptimizerConfig = OptimizerConfig(),
) -> ElasticNetModel:
    """Minimize mean logistic loss + lam * (ratio*||w||_1 + (1-ratio)/2*||w||_2^2)
    with lam = 10**alpha_exponent, on features standardized by training
    statistics. Runs a fixed iteration budget or stops early when the
    smooth-part gradient norm (including the prox step residual) is tiny.
    """
    if not 0 <= ratio <= 1:
        raise ValueError("ratio must lie in [0, 1]")
    y = train.labels
    if len(np.unique(y)) < 2:
        raise ValueError("training data contains a single class")
    lam = 10.0**alpha_exponent

    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    X = (train.features - mean) / std
    n, F = X.shape
    s = y.astype(float)

    # Lipschitz constant of the smooth part (mean logistic + ridge)
    L = float(np.linalg.norm(X, 2) ** 2) / (4.0 * n) + lam * (1.0 - ratio) + 0.25
    step = 1.0 / L
    l1 = lam * ratio
    l2 = lam * (1.0 - ratio)

    w = np.zeros(F)
    b = 0.0
    losses = [] if optimizer_config.track_loss else None
    for _ in range(optimizer_config.max_iters):
        t = X @ w + b
        p = _sigmoid(t)
        resid = p - s
        grad_w = X.T @ resid / n + l2 * w
        grad_b = float(resid.mean())
        w_new = w - step * grad_w
        # soft-threshold the L1 part
        w_new = np.sign(w_new) * np.maximum(np.abs(w_new) - step * l1, 0.0)
        b_new = b - step * grad_b
        if losses is not None:
            loss = float(np.mean(_log1pexp(t) - s * t)) + l1 * np.abs(w).sum() + 0.5 * l2 * w @ w
            losses.append(loss)
        move = np.sqrt(np.sum((w_new - w) ** 2) + (b_new - b) ** 2) / step
        w, b = w_new, b_new
        if move < optimizer_config.grad_tol:
            break
    if losses is not None:
        t = X @ w + b
        losses.append(
            float(np.mean(_log1pexp(t) - s * t)) + l1 * np.abs(w).sum() + 0.5 * l2 * w @ w
        )
    return ElasticNetModel(weights=w, intercept=float(b), mean=mean, std=std, losses=losses)


def accuracy(model: ElasticNetModel, ds: Dataset) -> float:
    return float((model.predict(ds.features) == ds.labels).mean())
