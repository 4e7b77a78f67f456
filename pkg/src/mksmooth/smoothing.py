"""Kernel smoothing estimators and their population (quadrature) versions.

Sample estimators, all with the ambient-distance Gaussian kernel:

    T_n[f](x)    = (1/n) sum_i K_eps(|X_i - x|) f(X_i)      (unnormalized)
    Tbar_n[f](x) = T_n[f](x) / T_n[1](x)                    (normalized)
    kde(x)       = T_n[1](x)
    nw(x)        = sum_i y_i K_eps(|X_i - x|) / sum_i K_eps(|X_i - x|)

Population versions integrate the same kernels against the sampling density
over the chart with periodic trapezoid quadrature (spectrally accurate for
smooth periodic integrands), validated by resolution doubling: the call
fails with ResolutionTooCoarse rather than silently returning an
under-resolved value.

Reductions use numpy's pairwise summation (np.sum / np.mean) in a fixed
order, so repeated runs produce bit-identical results independent of BLAS
threading.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from .errors import DegenerateDenominator, EmptySample, ResolutionTooCoarse
from .functions import AmbientFunction, get_function
from .geometry import TWO_PI, DensitySpec, EmbeddedManifold, chart_embed, density_chart
from .kernels import Bandwidth, kernel_eval
from .sampling import Sample, require_responses

DENOM_FLOOR = 1e-300
QUAD_RTOL = 1e-6
# Fraction of the integrand's L1 mass below which a quadrature value is
# treated as numerically zero (so resolution doubling is not asked to
# reproduce roundoff noise to relative precision).
ZERO_FRACTION = 1e-8

FunctionLike = Union[str, AmbientFunction, callable, np.ndarray, list]


def function_values(s: Sample, f: FunctionLike) -> np.ndarray:
    """Resolve f to its values at the sample points.

    f may be a length-n array of precomputed values, a registry id, or a
    callable on ambient coordinates.
    """
    if isinstance(f, (np.ndarray, list)):
        vals = np.asarray(f, dtype=float)
        if vals.shape != (s.n,):
            raise ValueError(f"function values must have shape ({s.n},), got {vals.shape}")
        return vals
    fn = get_function(f, s.manifold) if isinstance(f, str) else f
    return np.asarray(fn(s.points), dtype=float)


def _kernel_weights(s: Sample, x, bw: Bandwidth) -> np.ndarray:
    if s.n < 1:
        raise EmptySample("estimator requires at least one sample point")
    x = np.asarray(x, dtype=float)
    diff = s.points - x[None, :]
    dist = np.sqrt(np.sum(diff * diff, axis=1))
    return kernel_eval(dist, bw)


def smooth_unnormalized(s: Sample, f: FunctionLike, x, bw: Bandwidth) -> float:
    """Unnormalized kernel smoothing (1/n) sum K_eps(|X_i - x|) f(X_i)."""
    w = _kernel_weights(s, x, bw)
    return float(np.mean(w * function_values(s, f)))


def kde(s: Sample, x, bw: Bandwidth) -> float:
    """Kernel density estimate: unnormalized smoothing of f = 1."""
    return float(np.mean(_kernel_weights(s, x, bw)))


def smooth_normalized(s: Sample, f: FunctionLike, x, bw: Bandwidth) -> float:
    """Normalized kernel smoothing T_n[f](x) / T_n[1](x).

    Raises:
        DegenerateDenominator: the denominator underflowed (< 1e-300); every
            sample point is numerically infinitely far from x.
    """
    w = _kernel_weights(s, x, bw)
    denom = float(np.mean(w))
    if not denom > DENOM_FLOOR:
        raise DegenerateDenominator(f"T_n[1](x) = {denom!r} below {DENOM_FLOOR}")
    return float(np.mean(w * function_values(s, f))) / denom


def nw_regress(s: Sample, x, bw: Bandwidth) -> float:
    """Nadaraya-Watson regression estimate at x from the sample responses."""
    y = require_responses(s)
    w = _kernel_weights(s, x, bw)
    denom = float(np.mean(w))
    if not denom > DENOM_FLOOR:
        raise DegenerateDenominator(f"kernel mass at x = {denom!r} below {DENOM_FLOOR}")
    return float(np.mean(w * y)) / denom


# --- population versions -------------------------------------------------------

DEFAULT_RESOLUTION = {1: (2048,), 2: (512, 512)}
MAX_RESOLUTION = {1: (1 << 21,), 2: (1 << 11, 1 << 11)}


@dataclass(frozen=True)
class PopulationContext:
    """Manifold + density + per-axis chart quadrature resolution."""

    manifold: EmbeddedManifold
    density: DensitySpec
    resolution: Tuple[int, ...] = ()

    def __post_init__(self):
        res = self.resolution or DEFAULT_RESOLUTION[self.manifold.d]
        if len(res) != self.manifold.d or any(r < 64 for r in res):
            raise ValueError(f"resolution must be {self.manifold.d} axes of >= 64 nodes, got {res}")
        object.__setattr__(self, "resolution", tuple(int(r) for r in res))

    @classmethod
    def auto(cls, m: EmbeddedManifold, density: DensitySpec, epsilon: float) -> "PopulationContext":
        """Pick a resolution resolving the kernel scale: node spacing at most
        epsilon / (2 * chart speed) per axis, but never below the default."""
        speeds = (m.radius,) if m.kind == "circle" else (m.radius + m.minor, m.minor)
        res = []
        for speed, base, cap in zip(speeds, DEFAULT_RESOLUTION[m.d], MAX_RESOLUTION[m.d]):
            need = int(np.ceil(4.0 * np.pi * speed / epsilon))
            res.append(min(cap, max(base, 1 << int(np.ceil(np.log2(max(need, 1)))))))
        return cls(m, density, tuple(res))


def _chart_grid(m: EmbeddedManifold, resolution):
    axes = [np.linspace(0.0, TWO_PI, r, endpoint=False) for r in resolution]
    if m.d == 1:
        return axes[0][:, None]
    t1, t2 = np.meshgrid(axes[0], axes[1], indexing="ij")
    return np.column_stack([t1.ravel(), t2.ravel()])


def _resolve_fn(f: FunctionLike, m: EmbeddedManifold):
    if isinstance(f, str):
        return get_function(f, m)
    if callable(f):
        return f
    raise TypeError("population oracles need a re-evaluable function (id or callable)")


def _validated_quadrature(ctx: PopulationContext, evaluate):
    """Run `evaluate(resolution)` at the context resolution and its doubling;
    fail if they disagree beyond QUAD_RTOL, else return the finer value.

    evaluate returns (value, scale) with scale the L1 mass of the integrand:
    a value that is analytically zero (by symmetry, say) sits at roundoff
    level relative to that mass, so the comparison floor is a small fraction
    of the scale rather than of the (meaningless) value itself.  Works for
    scalar- or array-valued evaluations.
    """
    coarse, _ = evaluate(ctx.resolution)
    fine, scale = evaluate(tuple(2 * r for r in ctx.resolution))
    ref = max(float(np.max(np.abs(fine))), ZERO_FRACTION * scale, 1e-300)
    delta = float(np.max(np.abs(np.subtract(fine, coarse))))
    if delta > QUAD_RTOL * ref:
        raise ResolutionTooCoarse(
            f"doubling resolution {ctx.resolution} moved the value by "
            f"{delta / ref:.3e} relative (> {QUAD_RTOL:g}); increase resolution")
    return fine


def population_smooth(ctx: PopulationContext, f: FunctionLike, x, bw: Bandwidth,
                      normalized: bool = False) -> float:
    """Population smoothing T_eps[f](x) = int K_eps(|u - x|) f(u) rho(u) dvol(u)
    by chart quadrature (the ratio T_eps[f]/T_eps[1] when normalized)."""
    m = ctx.manifold
    fn = _resolve_fn(f, m)
    x = np.asarray(x, dtype=float)

    def evaluate(resolution):
        theta = _chart_grid(m, resolution)
        pts = chart_embed(m, theta)
        p = density_chart(m, ctx.density, theta)
        diff = pts - x[None, :]
        w = kernel_eval(np.sqrt(np.sum(diff * diff, axis=1)), bw)
        vol = TWO_PI ** m.d
        fvals = np.asarray(fn(pts), dtype=float)
        num = float(np.mean(w * fvals * p)) * vol
        mass = float(np.mean(np.abs(w * fvals * p))) * vol
        if not normalized:
            return num, mass
        den = float(np.mean(w * p)) * vol
        if not den > DENOM_FLOOR:
            raise DegenerateDenominator(f"T_eps[1](x) = {den!r} below {DENOM_FLOOR}")
        return num / den, mass / den

    return _validated_quadrature(ctx, evaluate)


def population_variance_integral(ctx: PopulationContext, f: FunctionLike, x,
                                 bw: Bandwidth) -> float:
    """The local second-moment integral

        (1/eps^d) int K^2(|u - x|/eps) ((f(u) - f(x))/eps)^2 rho(u) dvol(u)

    with K the bandwidth-1 kernel.  As eps -> 0 it converges (at rate eps) to
    rho(x) ||grad_M f(x)||^2 / (2 (4 pi)^{d/2}), the normalized-smoothing
    limit variance numerator.
    """
    m = ctx.manifold
    fn = _resolve_fn(f, m)
    x = np.asarray(x, dtype=float)
    eps = bw.epsilon
    fx = float(np.asarray(fn(x[None, :]), dtype=float)[0])
    k1 = Bandwidth(1.0, bw.d)

    def evaluate(resolution):
        theta = _chart_grid(m, resolution)
        pts = chart_embed(m, theta)
        p = density_chart(m, ctx.density, theta)
        diff = pts - x[None, :]
        t = np.sqrt(np.sum(diff * diff, axis=1)) / eps
        k2 = kernel_eval(t, k1) ** 2
        incr = (np.asarray(fn(pts), dtype=float) - fx) / eps
        val = float(np.mean(k2 * incr * incr * p)) * TWO_PI ** m.d / eps**m.d
        return val, val

    return _validated_quadrature(ctx, evaluate)
