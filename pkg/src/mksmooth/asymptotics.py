"""Limit variances, standardized statistics, and normality distance measures.

The four closed-form limit variances (d = manifold dimension, x the
evaluation point, rho the sampling density w.r.t. volume):

    unnormalized:  rho f^2 / (4 pi)^{d/2}        for sqrt(n eps^d)     (T_n[f] - center)
    normalized:    |grad_M f|^2 / (2 (4pi)^{d/2} rho)  for sqrt(n eps^{d-2}) (Tbar - center)
    critical:      (2 |hess_M f|_F^2 + |Lap_M f|^2) / (16 (4pi)^{d/2} rho)
                                                  for eps^{-1} sqrt(n eps^{d-2}) (Tbar - center)
    regression:    Var(Y|X=x) / ((4pi)^{d/2} rho_X)    for sqrt(n eps^d) (nw - center)

Distribution distance is the exact one-sample Kolmogorov-Smirnov sup taken
at the empirical jump points; for vector statistics a Mahalanobis-ball
proxy compares radii against the chi_m law (a lower bound for the sup over
all centered convex sets, since balls are a sub-family).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np
from scipy import stats

from .derivatives import manifold_gradient
from .errors import DegenerateVariance
from .functions import get_function
from .geometry import EmbeddedManifold, chart_embed
from .kernels import Bandwidth
from .sampling import Sample
from .smoothing import FunctionLike, nw_regress, smooth_normalized, smooth_unnormalized
from .spectral import pointwise_laplacian

STATISTIC_KINDS = ("unnormalized", "normalized", "critical", "laplacian", "regression")


@dataclass(frozen=True)
class LimitVariance:
    kind: str
    sigma2: float
    ingredients: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise DegenerateVariance(f"{self.kind} limit variance {self.sigma2!r} not positive")


def _check_density(rho_x: float):
    if not (np.isfinite(rho_x) and rho_x > 0):
        raise ValueError(f"density value must be positive, got {rho_x!r}")


def sigma_unnormalized(rho_x: float, f_x: float, d: int) -> LimitVariance:
    """Limit variance of sqrt(n eps^d) (T_n[f](x) - rho f) when f(x) != 0."""
    _check_density(rho_x)
    if f_x == 0.0:
        raise DegenerateVariance("unnormalized limit variance vanishes when f(x) = 0")
    s2 = rho_x * f_x**2 / (4.0 * math.pi) ** (d / 2.0)
    return LimitVariance("unnormalized", s2, {"rho": rho_x, "f": f_x, "d": d})


def sigma_normalized(rho_x: float, grad_norm: float, d: int) -> LimitVariance:
    """Limit variance of sqrt(n eps^{d-2}) (Tbar_n[f](x) - f) when grad_M f(x) != 0."""
    _check_density(rho_x)
    if grad_norm == 0.0:
        raise DegenerateVariance("normalized limit variance vanishes at critical points")
    s2 = grad_norm**2 / (2.0 * (4.0 * math.pi) ** (d / 2.0) * rho_x)
    return LimitVariance("normalized", s2, {"rho": rho_x, "grad_norm": grad_norm, "d": d})


def sigma_critical(rho_x: float, hess_frob: float, lap_abs: float, d: int) -> LimitVariance:
    """Limit variance of the eps^{-1}-rescaled normalized statistic at a
    critical point of f (where the gradient term degenerates)."""
    _check_density(rho_x)
    if hess_frob == 0.0:
        raise DegenerateVariance("critical limit variance needs a nonzero Hessian")
    s2 = (2.0 * hess_frob**2 + lap_abs**2) / (16.0 * (4.0 * math.pi) ** (d / 2.0) * rho_x)
    return LimitVariance("critical", s2,
                         {"rho": rho_x, "hess_frob": hess_frob, "lap_abs": lap_abs, "d": d})


def sigma_regression(rho_x: float, var_y_given_x: float, d: int) -> LimitVariance:
    """Limit variance of sqrt(n eps^d) (nw(x) - center) for regression."""
    _check_density(rho_x)
    if not var_y_given_x > 0.0:
        raise DegenerateVariance("regression limit variance needs Var(Y|X=x) > 0")
    s2 = var_y_given_x / ((4.0 * math.pi) ** (d / 2.0) * rho_x)
    return LimitVariance("regression", s2, {"rho": rho_x, "var_y": var_y_given_x, "d": d})


@dataclass(frozen=True)
class StandardizedSample:
    """B replicate values of one standardized statistic at one point."""

    values: np.ndarray
    kind: str
    centering: str  # population | truth
    n: int
    epsilon: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("standardized statistics must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def b(self) -> int:
        return self.values.shape[0]


def scaling_factor(kind: str, n: int, epsilon: float, d: int) -> float:
    """The normalizing rate in front of (estimator - center) for each statistic."""
    if kind == "unnormalized" or kind == "regression":
        return math.sqrt(n * epsilon**d)
    if kind == "normalized":
        return math.sqrt(n * epsilon ** (d - 2))
    if kind == "critical":
        return math.sqrt(n * epsilon ** (d - 2)) / epsilon
    if kind == "laplacian":
        return math.sqrt(n * epsilon ** (d + 2))
    raise ValueError(f"unknown statistic kind {kind!r}; expected one of {STATISTIC_KINDS}")


def standardized_statistic(kind: str, s: Sample, f: FunctionLike, x, bw: Bandwidth,
                           center: float) -> float:
    """One replicate of the standardized statistic of the given kind at x.

    center is the precomputed centering value (population quadrature value
    or the truth it converges to; the caller decides which regime).
    """
    if kind == "unnormalized":
        est = smooth_unnormalized(s, f, x, bw)
    elif kind in ("normalized", "critical"):
        est = smooth_normalized(s, f, x, bw)
    elif kind == "laplacian":
        est = pointwise_laplacian(s, f, x, bw)
    elif kind == "regression":
        est = nw_regress(s, x, bw)
    else:
        raise ValueError(f"unknown statistic kind {kind!r}; expected one of {STATISTIC_KINDS}")
    return scaling_factor(kind, s.n, bw.epsilon, bw.d) * (est - center)


def ks_distance(xs, sigma2: float) -> float:
    """Exact sup |F_hat(t) - Phi(t/sigma)|, evaluated at the sample jump points."""
    if not (np.isfinite(sigma2) and sigma2 > 0):
        raise DegenerateVariance(f"KS comparison needs sigma2 > 0, got {sigma2!r}")
    xs = np.sort(np.asarray(xs, dtype=float))
    b = xs.shape[0]
    cdf = stats.norm.cdf(xs / math.sqrt(sigma2))
    steps = np.arange(1, b + 1) / b
    return float(max(np.max(steps - cdf), np.max(cdf - (steps - 1.0 / b))))


def mahalanobis_ball_distance(xs, sigma2_diag) -> float:
    """Sup over observed radii of |P_hat(|Sigma^{-1/2}x| <= r) - P(chi_m <= r)|.

    A lower bound for the convex-set distance restricted to centered balls;
    with m = 1 it reduces to the KS distance of |x|/sigma against the
    half-normal law.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if xs.shape[0] == 1 and xs.shape[1] > 1:
        xs = xs.T
    sig = np.atleast_1d(np.asarray(sigma2_diag, dtype=float))
    if sig.shape[0] != xs.shape[1]:
        raise ValueError(f"need one variance per coordinate ({xs.shape[1]}), got {sig.shape[0]}")
    if not np.all(np.isfinite(sig) & (sig > 0)):
        raise DegenerateVariance("Mahalanobis comparison needs positive variances")
    m = xs.shape[1]
    r2 = np.sort(np.sum(xs * xs / sig[None, :], axis=1))
    b = r2.shape[0]
    cdf = stats.chi2.cdf(r2, df=m)
    steps = np.arange(1, b + 1) / b
    return float(max(np.max(steps - cdf), np.max(cdf - (steps - 1.0 / b))))


def find_critical_points(m: EmbeddedManifold, f, num_grid: int = 720) -> Tuple[float, ...]:
    """Chart angles of the critical points of f restricted to a circle.

    Root-finds the arclength derivative g(theta) = <grad f(X(theta)), X'(theta)>/R
    on sign-change brackets of a uniform scan; roots located to 1e-12.
    """
    if m.kind != "circle":
        raise ValueError("critical-point scan implemented for the circle only")
    f = get_function(f, m) if isinstance(f, str) else f

    def g(theta: float) -> float:
        x = chart_embed(m, np.array([theta]))
        return float(manifold_gradient(m, f, x)[0])

    thetas = np.linspace(0.0, 2.0 * math.pi, num_grid + 1)
    vals = np.array([g(t) for t in thetas])
    roots = []
    from scipy.optimize import brentq
    for a, b, ga, gb in zip(thetas[:-1], thetas[1:], vals[:-1], vals[1:]):
        if ga == 0.0:
            roots.append(a)
        elif ga * gb < 0.0:
            roots.append(brentq(g, a, b, xtol=1e-13, rtol=8.9e-16))
    return tuple(sorted(r % (2.0 * math.pi) for r in roots))


def bandwidth_window(n: int, d: int, injectivity_bound: float,
                     delta: float = 0.05) -> Tuple[float, float]:
    """Advisory bandwidth range (eps*_{n,delta}(1), eps_0).

    The lower end is the concentration threshold
    eps*_{n,delta}(C) = C ((log n v log(1/delta)) / n)^{1/d} at C = 1; the
    upper end is the curvature scale (injectivity bound), beyond which
    kernel localization arguments break down.
    """
    lo = (max(math.log(n), math.log(1.0 / delta)) / n) ** (1.0 / d)
    return lo, injectivity_bound
