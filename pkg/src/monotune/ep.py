"""Expectation-propagation inference for a GP over function values and
partial-derivative latents, where each derivative latent carries only a
sign observation through a near-step probit likelihood.

Value observations enter as exact Gaussian sites (precision 1/noise); only
the probit sign sites are iterated. The probit slack v (default 1e-6) makes
the likelihood nearly a step function, so the moment functions are computed
in the log domain with an asymptotic expansion of the Gaussian hazard for
strongly contradicted sites.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import log_ndtr, ndtr

from .kernel import (
    ConditioningError,
    JointGram,
    KernelParams,
    build_joint_gram,
    cholesky_with_jitter,
    se_kernel_matrix,
)

__all__ = [
    "ValueObservation",
    "SignObservation",
    "EPConfig",
    "EPState",
    "ep_fit",
    "ep_predict",
    "ep_predict_batch",
    "derivative_marginal",
    "sign_probability",
    "ep_log_evidence",
    "gauss_hazard",
    "hazard_slope",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ValueObservation:
    """A hyperparameter vector (normalized units) and its measured
    validation performance."""

    x: tuple
    y: float


@dataclass(frozen=True)
class SignObservation:
    """A virtual point asserting the sign of df/dx_d at x.

    m must be +1 or -1; a neutral dimension is represented by the absence
    of any SignObservation, never by a third value.
    """

    x: tuple
    d: int
    m: int

    def __post_init__(self):
        if self.m not in (1, -1):
            raise ValueError(f"sign m must be +1 or -1, got {self.m}")


@dataclass(frozen=True)
class EPConfig:
    damping: float = 0.8
    max_sweeps: int = 200
    tolerance: float = 1e-6
    jitter: float = 1e-9

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise ValueError("damping must be in (0, 1]")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


def gauss_hazard(z: float) -> float:
    """phi(z) / Phi(z), stable down to z ~ -1e9.

    For z < -6 the direct ratio loses accuracy (and phi underflows long
    before Phi does in the log domain), so an asymptotic expansion of the
    hazard is used instead.
    """
    if z < -6.0:
        return -z - 1.0 / z + 2.0 / z**3 - 10.0 / z**5
    log_phi = -0.5 * z * z - 0.5 * _LOG_2PI
    return math.exp(log_phi - log_ndtr(z))


def hazard_slope(z: float) -> float:
    """rho(z) * (rho(z) + z) with rho the Gaussian hazard; lies in (0, 1).

    This is the shrinkage factor of the tilted variance. rho + z suffers
    catastrophic cancellation for large negative z, hence the series.
    """
    rho = gauss_hazard(z)
    if z < -6.0:
        return rho * (-1.0 / z + 2.0 / z**3 - 10.0 / z**5)
    return rho * (rho + z)


@dataclass
class EPState:
    """Converged (or best-effort) EP approximation of the joint posterior."""

    gram: JointGram
    X: np.ndarray
    y: np.ndarray
    signs: list[SignObservation]
    params: KernelParams
    v: float
    site_precisions: np.ndarray
    site_means: np.ndarray
    mu_post: np.ndarray
    Sigma_post: np.ndarray
    log_evidence: float
    converged: bool
    sweeps_used: int
    skipped_updates: int = 0
    clamped_variances: int = 0
    # cached factorization for O(n^2) predictions: with site precisions
    # lam and natural means h, alpha = K^-1 mu and
    # var(x*) = k** - || LB^-1 (sqrt(lam) * k_*) ||^2.
    alpha: np.ndarray = field(default=None, repr=False)
    srl: np.ndarray = field(default=None, repr=False)
    LB: np.ndarray = field(default=None, repr=False)

    @property
    def p(self) -> int:
        return self.X.shape[0]

    @property
    def M(self) -> int:
        return len(self.signs)


def _posterior(gram: JointGram, lam: np.ndarray, h: np.ndarray):
    """Mean and covariance of N(0, K) times independent Gaussian sites with
    precisions lam and natural means h, via the B = I + sqrt(L) K sqrt(L)
    factorization (handles zero precisions)."""
    K = gram.full
    n = K.shape[0]
    srl = np.sqrt(lam)
    B = np.eye(n) + (srl[:, None] * K) * srl[None, :]
    LB, _ = cholesky_with_jitter(B, 0.0)
    V = solve_triangular(LB, srl[:, None] * K, lower=True)
    Sigma = K - V.T @ V
    Sigma = 0.5 * (Sigma + Sigma.T)
    mu = Sigma @ h
    return mu, Sigma


def ep_fit(
    values: list[ValueObservation],
    signs: list[SignObservation],
    params: KernelParams,
    v: float = 1e-6,
    config: EPConfig = EPConfig(),
) -> EPState:
    """Run sequential EP over the probit sign sites.

    With no sign sites the result is exact GP regression. Sites with a
    non-positive cavity precision are skipped for that sweep (standard EP
    guard) and counted in ``skipped_updates``.
    """
    if not values:
        raise ValueError("at least one value observation is required")
    if v <= 0:
        raise ValueError("probit slack v must be positive")
    X = np.array([np.asarray(o.x, dtype=float) for o in values])
    y = np.array([float(o.y) for o in values])
    signs = list(signs)
    M = len(signs)
    p = X.shape[0]
    n = p + M

    gram = build_joint_gram(X, signs, params, jitter=config.jitter)
    noise = max(params.noise, 1e-12)

    # fixed Gaussian value sites + iterated probit sites, natural form
    tau = np.zeros(M)
    nu = np.zeros(M)
    lam = np.zeros(n)
    lam[:p] = 1.0 / noise
    h = np.zeros(n)
    h[:p] = y / noise

    mu, Sigma = _posterior(gram, lam, h)
    converged = M == 0
    sweeps = 0
    skipped = 0
    for sweep in range(config.max_sweeps if M else 0):
        sweeps = sweep + 1
        max_delta = 0.0
        for i in range(M):
            idx = p + i
            sigma2_i = Sigma[idx, idx]
            mu_i = mu[idx]
            tau_cav = 1.0 / sigma2_i - tau[i]
            nu_cav = mu_i / sigma2_i - nu[i]
            if tau_cav <= 0:
                skipped += 1
                continue
            mu_c = nu_cav / tau_cav
            s2_c = 1.0 / tau_cav
            m = signs[i].m
            denom = math.sqrt(v * v + s2_c)
            z = m * mu_c / denom
            rho = gauss_hazard(z)
            beta = hazard_slope(z)
            mu_hat = mu_c + s2_c * m * rho / denom
            s2_hat = s2_c * (1.0 - s2_c * beta / (v * v + s2_c))
            tau_new = max(1.0 / s2_hat - tau_cav, 0.0)
            nu_new = mu_hat / s2_hat - nu_cav
            d_tau = config.damping * (tau_new - tau[i])
            d_nu = config.damping * (nu_new - nu[i])
            tau[i] += d_tau
            nu[i] += d_nu
            lam[idx] = tau[i]
            h[idx] = nu[i]
            max_delta = max(max_delta, abs(d_tau), abs(d_nu))
            mu, Sigma = _posterior(gram, lam, h)
        if max_delta < config.tolerance:
            converged = True
            break

    log_z = _log_evidence(gram, X, y, signs, noise, v, tau, nu, mu, Sigma)

    state = EPState(
        gram=gram,
        X=X,
        y=y,
        signs=signs,
        params=params,
        v=v,
        site_precisions=tau,
        site_means=nu,
        mu_post=mu,
        Sigma_post=Sigma,
        log_evidence=log_z,
        converged=converged,
        sweeps_used=sweeps,
        skipped_updates=skipped,
    )
    # prediction cache; alpha = K^-1 mu computed without forming K^-1:
    # K^-1 Sigma h = h - sqrt(lam) B^-1 sqrt(lam) K h
    K = gram.full
    srl = np.sqrt(lam)
    B = np.eye(n) + (srl[:, None] * K) * srl[None, :]
    LB, _ = cholesky_with_jitter(B, 0.0)
    state.srl = srl
    state.LB = LB
    state.alpha = h - srl * cho_solve((LB, True), srl * (K @ h))
    return state


def _gauss_log_marginal(K_ff: np.ndarray, y: np.ndarray, noise: float) -> float:
    """Exact GP log marginal likelihood of values under Gaussian noise."""
    p = len(y)
    L, _ = cholesky_with_jitter(K_ff + noise * np.eye(p), 0.0)
    a = cho_solve((L, True), y)
    return float(
        -0.5 * y @ a - np.sum(np.log(np.diag(L))) - 0.5 * p * _LOG_2PI
    )


def _log_evidence(gram, X, y, signs, noise, v, tau, nu, mu, Sigma) -> float:
    """EP approximation of log Z.

    Decomposition: exact Gaussian evidence of the values, plus per-site
    normalizer corrections against their cavities, plus the Gaussian
    integral of the site product under the values-only posterior.
    """
    p = len(y)
    M = len(signs)
    log_z_gauss = _gauss_log_marginal(gram.full[:p, :p], y, noise)
    if M == 0:
        return log_z_gauss

    n = p + M
    K = gram.full
    # values-only posterior over the joint latent
    lam0 = np.zeros(n)
    lam0[:p] = 1.0 / noise
    h0 = np.zeros(n)
    h0[:p] = y / noise
    mu0, Sigma0 = _posterior(gram, lam0, h0)

    # per-site scale factors from final cavities
    total = log_z_gauss
    for i in range(M):
        idx = p + i
        sigma2_i = Sigma[idx, idx]
        tau_cav = 1.0 / sigma2_i - tau[i]
        nu_cav = mu[idx] / sigma2_i - nu[i]
        if tau_cav <= 0:
            continue
        mu_c = nu_cav / tau_cav
        s2_c = 1.0 / tau_cav
        z = signs[i].m * mu_c / math.sqrt(v * v + s2_c)
        log_zhat = float(log_ndtr(z))
        # log of int N(u | mu_c, s2_c) exp(-tau u^2 / 2 + nu u) du
        c = 1.0 + tau[i] * s2_c
        log_g1 = -0.5 * math.log(c) + (
            nu[i] ** 2 * s2_c + 2.0 * nu[i] * mu_c - tau[i] * mu_c**2
        ) / (2.0 * c)
        total += log_zhat - log_g1

    # Gaussian integral of exp(-u' S u / 2 + nu' u) under N(mu0, Sigma0)
    nu_full = np.zeros(n)
    nu_full[p:] = nu
    S_full = np.zeros(n)
    S_full[p:] = tau
    L0, _ = cholesky_with_jitter(Sigma0, 0.0)
    prec0 = cho_solve((L0, True), np.eye(n))
    A = prec0 + np.diag(S_full)
    b = prec0 @ mu0 + nu_full
    LA, _ = cholesky_with_jitter(A, 0.0)
    logdet_sigma0 = 2.0 * np.sum(np.log(np.diag(L0)))
    logdet_a = 2.0 * np.sum(np.log(np.diag(LA)))
    quad_b = float(b @ cho_solve((LA, True), b))
    quad_0 = float(mu0 @ prec0 @ mu0)
    total += -0.5 * (logdet_sigma0 + logdet_a) + 0.5 * (quad_b - quad_0)
    return float(total)


def _cross_cov_values(state: EPState, Z: np.ndarray) -> np.ndarray:
    """(n_test, p + M) covariances between f at test points and all
    training latents (values first, then derivative sites)."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    params = state.params
    Ks = np.empty((Z.shape[0], state.p + state.M))
    Ks[:, : state.p] = se_kernel_matrix(Z, state.X, params)
    theta = params.lengthscale
    for j, s in enumerate(state.signs):
        zj = np.asarray(s.x, dtype=float)
        kz = se_kernel_matrix(Z, zj[None, :], params)[:, 0]
        # cov(f(x*), df/dz_d(z_j)) = d/dz_d k(x*, z_j)
        Ks[:, state.p + j] = -((zj[s.d] - Z[:, s.d]) / theta) * kz
    return Ks


def ep_predict_batch(state: EPState, Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized predictive means and variances of f at test points."""
    Ks = _cross_cov_values(state, Z)
    means = Ks @ state.alpha
    kss = state.params.amplitude
    V = solve_triangular(state.LB, state.srl[:, None] * Ks.T, lower=True)
    variances = kss - np.sum(V * V, axis=0)
    neg = variances < -1e-9
    if neg.any():
        raise ConditioningError(
            f"predictive variance {variances[neg].min():.3e} below -1e-9",
            state.gram.jitter,
        )
    return means, np.maximum(variances, 0.0)


def ep_predict(state: EPState, x_star: np.ndarray) -> tuple[float, float]:
    """Gaussian predictive distribution of f(x*)."""
    x_star = np.asarray(x_star, dtype=float)
    if x_star.shape != (state.X.shape[1],):
        raise ValueError(
            f"x_star has dimension {x_star.shape}, expected ({state.X.shape[1]},)"
        )
    if np.any(x_star < -1e-12) or np.any(x_star > 1 + 1e-12):
        warnings.warn("ep_predict called outside the normalized box", stacklevel=2)
    means, variances = ep_predict_batch(state, x_star[None, :])
    return float(means[0]), float(variances[0])


def derivative_marginal(state: EPState, x: np.ndarray, d: int) -> tuple[float, float]:
    """Posterior marginal (mean, variance) of df/dx_d at x."""
    from .kernel import se_kernel_dd, se_kernel_dobs

    x = np.asarray(x, dtype=float)
    D = state.X.shape[1]
    if not 0 <= d < D:
        raise ValueError(f"dimension index {d} out of range for D={D}")
    n = state.p + state.M
    g = np.empty(n)
    for i in range(state.p):
        g[i] = se_kernel_dobs(x, state.X[i], d, state.params)
    for j, s in enumerate(state.signs):
        g[state.p + j] = se_kernel_dd(
            x, np.asarray(s.x, dtype=float), d, s.d, state.params
        )
    prior_var = state.params.amplitude / state.params.lengthscale
    mean = float(g @ state.alpha)
    u = solve_triangular(state.LB, state.srl * g, lower=True)
    var = prior_var - float(u @ u)
    if var < -1e-9:
        raise ConditioningError(
            f"derivative variance {var:.3e} below -1e-9", state.gram.jitter
        )
    return mean, max(var, 0.0)


def _matching_site(state: EPState, site: SignObservation) -> int | None:
    x = np.asarray(site.x, dtype=float)
    for j, s in enumerate(state.signs):
        if s.d == site.d and np.array_equal(np.asarray(s.x, dtype=float), x):
            return j
    return None


def sign_probability(state: EPState, site: SignObservation) -> float:
    """Posterior probability that the derivative at (site.x, site.d) has
    sign site.m.

    At a location that is itself a fitted sign site, the Gaussian EP
    marginal straddles zero by construction (it moment-matches a truncated
    Gaussian), so the probability is taken under the tilted marginal
    (cavity times the exact probit factor), which concentrates on the
    observed side as the slack v -> 0. Elsewhere the Gaussian marginal is
    used directly.
    """
    j = _matching_site(state, site)
    if j is not None and state.site_precisions[j] >= 0:
        idx = state.p + j
        sigma2 = state.Sigma_post[idx, idx]
        tau_cav = 1.0 / sigma2 - state.site_precisions[j]
        if tau_cav > 0:
            nu_cav = state.mu_post[idx] / sigma2 - state.site_means[j]
            mu_c = nu_cav / tau_cav
            s2_c = 1.0 / tau_cav
            m_fit = state.signs[j].m
            # step-probit limit of the tilted P(m_fit * f' > 0)
            num = float(ndtr(m_fit * mu_c / math.sqrt(s2_c)))
            den = float(ndtr(m_fit * mu_c / math.sqrt(state.v**2 + s2_c)))
            p_fit = min(num / den, 1.0) if den > 0 else 1.0
            return p_fit if site.m == m_fit else 1.0 - p_fit
    mean, var = derivative_marginal(state, np.asarray(site.x, dtype=float), site.d)
    z = site.m * mean / math.sqrt(state.v**2 + var)
    return float(ndtr(z))


def ep_log_evidence(state: EPState) -> float:
    """Approximate log evidence; exact when there are no sign sites."""
    if not state.converged:
        warnings.warn("EP did not converge; log evidence is best-effort", stacklevel=2)
    return state.log_evidence
