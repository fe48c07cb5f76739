"""Hotelling T^2 statistic for windowed means, its F-based null law and control limits.

The control limit of the moving-average chart with window ``W`` trained on
``N`` samples of dimension ``p`` is::

    delta2_W = p (N + W) (N - 1) / (N W (N - p)) * F_alpha(p, N - p)

and ``delta2_1`` is the single-observation limit.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, DomainError, SingularCovariance, TooFewSamples

RCOND_MIN = 1e-12

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAXITER = 20000


@dataclass(frozen=True)
class GaussianModel:
    """Training-phase Gaussian estimate: sample mean, unbiased covariance and its inverse.

    Instances are immutable; arrays are flagged read-only.
    """

    mean_hat: np.ndarray
    cov_hat: np.ndarray
    cov_inv: np.ndarray
    n_train: int
    dim: int
    # lower Cholesky factor inverse, so that T^2 = ||chol_inv @ d||^2
    chol_inv: np.ndarray

    @classmethod
    def from_moments(cls, mean, cov, n_train: int) -> "GaussianModel":
        """Build a model from known moments (e.g. a stored model or population values)."""
        mean = np.array(mean, dtype=float).reshape(-1)
        cov = np.array(cov, dtype=float)
        p = mean.shape[0]
        if cov.shape != (p, p):
            raise DimensionMismatch(f"covariance shape {cov.shape} does not match mean of length {p}")
        if n_train < p + 2:
            raise TooFewSamples(f"need at least p+2={p + 2} training samples, got {n_train}")
        cov = 0.5 * (cov + cov.T)
        eig = np.linalg.eigvalsh(cov)
        if eig[0] <= 0 or eig[0] / eig[-1] < RCOND_MIN:
            raise SingularCovariance(f"covariance is singular or ill-conditioned (eigenvalues {eig})")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise SingularCovariance(str(exc)) from exc
        chol_inv = np.linalg.inv(chol)
        chol_inv = np.tril(chol_inv)
        cov_inv = chol_inv.T @ chol_inv
        cov_inv = 0.5 * (cov_inv + cov_inv.T)
        for arr in (mean, cov, cov_inv, chol_inv):
            arr.setflags(write=False)
        return cls(mean, cov, cov_inv, int(n_train), p, chol_inv)


@dataclass(frozen=True)
class ChartConfig:
    alpha: float
    window: int = 1

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if int(self.window) != self.window or self.window < 1:
            raise DomainError(f"window must be a positive integer, got {self.window}")


def fit_model(samples: Sequence[Sequence[float]]) -> GaussianModel:
    """Estimate the sample mean and unbiased sample covariance (divisor N-1).

    Args:
        samples: N x p array-like of fault-free training observations.

    Raises:
        TooFewSamples: fewer than p + 2 rows.
        SingularCovariance: the covariance cannot be inverted reliably.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2:
        raise DimensionMismatch(f"samples must be a 2-D array, got shape {x.shape}")
    n, p = x.shape
    if n < p + 2:
        raise TooFewSamples(f"need at least p+2={p + 2} samples, got {n}")
    mean = x.mean(axis=0)
    centred = x - mean
    cov = centred.T @ centred / (n - 1)
    return GaussianModel.from_moments(mean, cov, n)


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def betainc_pair(a: float, b: float, x: float, xc: float | None = None) -> tuple[float, float]:
    """Regularized incomplete beta ``I_x(a, b)`` and its complement, both to full precision.

    ``xc`` may carry ``1 - x`` computed without cancellation.
    """
    if a <= 0 or b <= 0:
        raise DomainError("beta parameters must be positive")
    if xc is None:
        xc = 1.0 - x
    if x <= 0.0:
        return 0.0, 1.0
    if xc <= 0.0:
        return 1.0, 0.0
    log_front = a * math.log(x) + b * math.log(xc) - _log_beta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        lower = math.exp(log_front) * _betacf(a, b, x) / a
        return lower, 1.0 - lower
    upper = math.exp(log_front) * _betacf(b, a, xc) / b
    return 1.0 - upper, upper


def _f_sf_logpdf(x: float, d1: float, d2: float) -> tuple[float, float]:
    # survival P(F > x) and log density of F at x
    a, b = d1 / 2.0, d2 / 2.0
    denom = d1 * x + d2
    y, yc = d1 * x / denom, d2 / denom
    sf = betainc_pair(a, b, y, yc)[1]
    logpdf = (a - 1.0) * math.log(y) + (b - 1.0) * math.log(yc) - _log_beta(a, b)
    logpdf += math.log(d1 * d2) - 2.0 * math.log(denom)
    return sf, logpdf


def f_sf(x: float, d1: float, d2: float) -> float:
    """Survival function P(F(d1, d2) > x)."""
    if x <= 0:
        return 1.0
    return _f_sf_logpdf(x, d1, d2)[0]


@functools.lru_cache(maxsize=4096)
def f_quantile(alpha: float, d1: int, d2: int, rtol: float = 1e-10) -> float:
    """Upper-alpha point of the central F distribution, i.e. x with P(F(d1, d2) > x) = alpha.

    Inverts the regularized incomplete beta function by Newton iteration on
    ``log x`` inside a bisection bracket; a Newton step that leaves the bracket is
    replaced by a bisection step.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if d1 < 1 or d2 < 1:
        raise DomainError(f"degrees of freedom must be >= 1, got ({d1}, {d2})")

    def g(t):
        sf, logpdf = _f_sf_logpdf(math.exp(t), d1, d2)
        return sf - alpha, logpdf + t

    lo, hi = -1.0, 1.0
    while g(lo)[0] < 0:
        lo *= 2.0
    while g(hi)[0] > 0:
        hi *= 2.0
    t = 0.5 * (lo + hi)
    tol = 0.25 * rtol
    for _ in range(500):
        gt, log_slope = g(t)
        if gt > 0:
            lo = t
        elif gt < 0:
            hi = t
        else:
            break
        t_new = 0.5 * (lo + hi)
        if log_slope > -700:
            cand = t + gt / math.exp(log_slope)
            if lo < cand < hi:
                t_new = cand
        if abs(t_new - t) <= tol or hi - lo <= tol:
            t = t_new
            break
        t = t_new
    return math.exp(t)


def limit_factor(n_train: int, dim: int, window: int) -> float:
    """Scale p (N + W)(N - 1) / (N W (N - p)) multiplying the F quantile."""
    n, p, w = n_train, dim, window
    return p * (n + w) * (n - 1) / (n * w * (n - p))


def control_limit_from(n_train: int, dim: int, alpha: float, window: int) -> float:
    if n_train < dim + 2:
        raise TooFewSamples(f"need N >= p + 2, got N={n_train}, p={dim}")
    ChartConfig(alpha, window)
    return limit_factor(n_train, dim, window) * f_quantile(alpha, dim, n_train - dim)


def control_limit(model: GaussianModel, cfg: ChartConfig) -> float:
    """Control limit delta^2_W of the moving-average T^2 chart."""
    return control_limit_from(model.n_train, model.dim, cfg.alpha, cfg.window)


def hotelling_t2(model: GaussianModel, window_mean) -> float:
    """Quadratic form (m - xbar)^T S^-1 (m - xbar) for a window mean m."""
    m = np.asarray(window_mean, dtype=float).reshape(-1)
    if m.shape[0] != model.dim:
        raise DimensionMismatch(f"expected a {model.dim}-vector, got length {m.shape[0]}")
    z = model.chol_inv @ (m - model.mean_hat)
    return float(z @ z)


def hotelling_t2_many(model: GaussianModel, window_means) -> np.ndarray:
    """Vectorised :func:`hotelling_t2` over the rows of ``window_means``."""
    m = np.asarray(window_means, dtype=float)
    if m.ndim != 2 or m.shape[1] != model.dim:
        raise DimensionMismatch(f"expected an (n, {model.dim}) array, got shape {m.shape}")
    z = (m - model.mean_hat) @ model.chol_inv.T
    return np.einsum("ij,ij->i", z, z)
