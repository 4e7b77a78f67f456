"""Gradient and Hessian estimators for the smoothing operators.

Differentiating T_n[f](x) = (1/n) sum_i K_eps(|X_i - x|) f(X_i) in the
ambient variable x gives, with z_i = (X_i - x)/eps and K the bandwidth-1
kernel,

    grad_x T_n[f](x)  = (1/(n eps^{d+1})) sum_i K(|z_i|) z_i f(X_i)
    hess_x T_n[f](x)  = (1/(n eps^{d+2})) sum_i K(|z_i|) (z_i z_i^T - I_D) f(X_i)

Tangent versions restrict to the manifold: with J(x) the orthonormal frame
and b_ij the second fundamental form,

    grad_M F = J^T grad F
    (hess_M F)_ij = (J^T (hess F) J)_ij + <grad F, b_ij>

(the extrinsic chain rule along geodesics; hess_M F is the second derivative
matrix of F o Exp_x at 0, so the geometer's Laplacian -div grad equals
MINUS its trace).  Normalized versions apply quotient rules to
Tbar = T[f]/T[1], where every gradient/Hessian entering the five-term
Hessian formula is already the tangent version.

Population versions integrate the analytically differentiated kernels by
the same validated chart quadrature as population_smooth.

Analytic helpers (manifold_gradient / manifold_hessian / manifold_laplacian)
apply the identical frame algebra to a function's closed-form ambient
derivatives, giving the truth values the estimators converge to.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateDenominator
from .functions import AmbientFunction, get_function
from .geometry import (TWO_PI, EmbeddedManifold, chart_embed, density_chart,
                       second_fundamental_form, tangent_frame)
from .kernels import Bandwidth, kernel_eval
from .sampling import Sample
from .smoothing import (DENOM_FLOOR, FunctionLike, PopulationContext,
                        _chart_grid, _resolve_fn, _validated_quadrature,
                        function_values, kde, smooth_normalized, smooth_unnormalized,
                        population_smooth)


def _scaled_diffs(s: Sample, x, bw: Bandwidth):
    x = np.asarray(x, dtype=float)
    z = (s.points - x[None, :]) / bw.epsilon
    k = kernel_eval(np.sqrt(np.sum(z * z, axis=1)), Bandwidth(1.0, bw.d))
    return z, k


def ambient_grad_T(s: Sample, f: FunctionLike, x, bw: Bandwidth) -> np.ndarray:
    """Ambient gradient of the unnormalized smoothing estimator, shape (D,)."""
    z, k = _scaled_diffs(s, x, bw)
    w = k * function_values(s, f)
    return np.sum(w[:, None] * z, axis=0) / (s.n * bw.epsilon ** (bw.d + 1))


def ambient_hess_T(s: Sample, f: FunctionLike, x, bw: Bandwidth) -> np.ndarray:
    """Ambient Hessian of the unnormalized smoothing estimator, shape (D, D)."""
    z, k = _scaled_diffs(s, x, bw)
    w = k * function_values(s, f)
    big_d = z.shape[1]
    outer = z[:, :, None] * z[:, None, :] - np.eye(big_d)[None, :, :]
    return np.sum(w[:, None, None] * outer, axis=0) / (s.n * bw.epsilon ** (bw.d + 2))


# --- tangent assembly -----------------------------------------------------------

def _tangent_grad(m: EmbeddedManifold, x, ambient_grad) -> np.ndarray:
    return tangent_frame(m, x).T @ np.asarray(ambient_grad, dtype=float)


def _tangent_hess(m: EmbeddedManifold, x, ambient_grad, ambient_hess) -> np.ndarray:
    j = tangent_frame(m, x)
    b = second_fundamental_form(m, x)
    g = np.asarray(ambient_grad, dtype=float)
    return j.T @ np.asarray(ambient_hess, dtype=float) @ j + b @ g


def grad_unnormalized(s: Sample, f: FunctionLike, x, bw: Bandwidth) -> np.ndarray:
    """Tangent-frame gradient coefficients of T_n[f] at on-manifold x, shape (d,)."""
    return _tangent_grad(s.manifold, x, ambient_grad_T(s, f, x, bw))


def hess_unnormalized(s: Sample, f: FunctionLike, x, bw: Bandwidth) -> np.ndarray:
    """Tangent Hessian of T_n[f] at on-manifold x, shape (d, d)."""
    return _tangent_hess(s.manifold, x, ambient_grad_T(s, f, x, bw),
                         ambient_hess_T(s, f, x, bw))


def _normalized_grad_from_parts(m, x, p, q, gp, gq):
    gp_t = _tangent_grad(m, x, gp)
    gq_t = _tangent_grad(m, x, gq)
    return gp_t / q - (p / q**2) * gq_t


def _normalized_hess_from_parts(m, x, p, q, gp, gq, hp, hq):
    gp_t = _tangent_grad(m, x, gp)
    gq_t = _tangent_grad(m, x, gq)
    hp_t = _tangent_hess(m, x, gp, hp)
    hq_t = _tangent_hess(m, x, gq, hq)
    cross = np.outer(gp_t, gq_t)
    return (hp_t / q - (cross + cross.T) / q**2
            + 2.0 * p * np.outer(gq_t, gq_t) / q**3 - p * hq_t / q**2)


def _sample_parts(s: Sample, f: FunctionLike, x, bw: Bandwidth):
    p = smooth_unnormalized(s, f, x, bw)
    q = kde(s, x, bw)
    if not q > DENOM_FLOOR:
        raise DegenerateDenominator(f"T_n[1](x) = {q!r} below {DENOM_FLOOR}")
    ones = np.ones(s.n)
    return (p, q, ambient_grad_T(s, f, x, bw), ambient_grad_T(s, ones, x, bw),
            ambient_hess_T(s, f, x, bw), ambient_hess_T(s, ones, x, bw))


def grad_normalized(s: Sample, f: FunctionLike, x, bw: Bandwidth) -> np.ndarray:
    """Tangent gradient of the normalized estimator Tbar_n[f], shape (d,)."""
    p, q, gp, gq, _, _ = _sample_parts(s, f, x, bw)
    return _normalized_grad_from_parts(s.manifold, x, p, q, gp, gq)


def hess_normalized(s: Sample, f: FunctionLike, x, bw: Bandwidth) -> np.ndarray:
    """Tangent Hessian of Tbar_n[f] by the five-term quotient rule, shape (d, d)."""
    p, q, gp, gq, hp, hq = _sample_parts(s, f, x, bw)
    return _normalized_hess_from_parts(s.manifold, x, p, q, gp, gq, hp, hq)


# --- population versions --------------------------------------------------------

def _population_kernel_moments(ctx: PopulationContext, f: FunctionLike, x, bw: Bandwidth):
    """Quadrature values of (T_eps[f], grad T_eps[f], hess T_eps[f]) at x."""
    m = ctx.manifold
    fn = _resolve_fn(f, m)
    x = np.asarray(x, dtype=float)
    eps = bw.epsilon
    k1 = Bandwidth(1.0, bw.d)
    big_d = m.D

    def evaluate(resolution):
        theta = _chart_grid(m, resolution)
        pts = chart_embed(m, theta)
        p = density_chart(m, ctx.density, theta)
        z = (pts - x[None, :]) / eps
        w = kernel_eval(np.sqrt(np.sum(z * z, axis=1)), k1) * np.asarray(fn(pts), dtype=float) * p
        vol = TWO_PI ** m.d
        val = float(np.mean(w)) * vol / eps**m.d
        grad = np.mean(w[:, None] * z, axis=0) * vol / eps ** (m.d + 1)
        outer = z[:, :, None] * z[:, None, :] - np.eye(big_d)[None, :, :]
        hess = np.mean(w[:, None, None] * outer, axis=0) * vol / eps ** (m.d + 2)
        aw = np.abs(w)
        zn = np.sqrt(np.sum(z * z, axis=1))
        mass = float(np.mean(aw * np.maximum(1.0, zn) ** 2)) * vol
        scale = mass * max(1.0, 1.0 / eps ** (m.d + 2))
        return np.concatenate([[val], grad, hess.ravel()]), scale

    packed = _validated_quadrature(ctx, evaluate)
    return float(packed[0]), packed[1:1 + big_d], packed[1 + big_d:].reshape(big_d, big_d)


def population_ambient_grad(ctx: PopulationContext, f, x, bw: Bandwidth) -> np.ndarray:
    return _population_kernel_moments(ctx, f, x, bw)[1]


def population_ambient_hess(ctx: PopulationContext, f, x, bw: Bandwidth) -> np.ndarray:
    return _population_kernel_moments(ctx, f, x, bw)[2]


def population_grad_unnormalized(ctx: PopulationContext, f, x, bw: Bandwidth) -> np.ndarray:
    return _tangent_grad(ctx.manifold, x, population_ambient_grad(ctx, f, x, bw))


def population_hess_unnormalized(ctx: PopulationContext, f, x, bw: Bandwidth) -> np.ndarray:
    _, grad, hess = _population_kernel_moments(ctx, f, x, bw)
    return _tangent_hess(ctx.manifold, x, grad, hess)


def _population_parts(ctx: PopulationContext, f, x, bw: Bandwidth):
    p, gp, hp = _population_kernel_moments(ctx, f, x, bw)
    q, gq, hq = _population_kernel_moments(ctx, "one", x, bw)
    if not q > DENOM_FLOOR:
        raise DegenerateDenominator(f"T_eps[1](x) = {q!r} below {DENOM_FLOOR}")
    return p, q, gp, gq, hp, hq


def population_grad_normalized(ctx: PopulationContext, f, x, bw: Bandwidth) -> np.ndarray:
    p, q, gp, gq, _, _ = _population_parts(ctx, f, x, bw)
    return _normalized_grad_from_parts(ctx.manifold, x, p, q, gp, gq)


def population_hess_normalized(ctx: PopulationContext, f, x, bw: Bandwidth) -> np.ndarray:
    p, q, gp, gq, hp, hq = _population_parts(ctx, f, x, bw)
    return _normalized_hess_from_parts(ctx.manifold, x, p, q, gp, gq, hp, hq)


# --- analytic truth values ------------------------------------------------------

def _require_derivatives(f, order: int):
    if not isinstance(f, AmbientFunction) or f.grad is None or (order > 1 and f.hess is None):
        raise ValueError("analytic manifold derivatives need an AmbientFunction "
                         "with closed-form grad" + (" and hess" if order > 1 else ""))


def manifold_gradient(m: EmbeddedManifold, f, x) -> np.ndarray:
    """Tangent-frame coefficients of grad_M f at x from f's ambient gradient."""
    f = get_function(f, m) if isinstance(f, str) else f
    _require_derivatives(f, 1)
    return _tangent_grad(m, x, f.grad(np.asarray(x, dtype=float)))


def manifold_hessian(m: EmbeddedManifold, f, x) -> np.ndarray:
    """Tangent Hessian matrix of f at x (second derivative of f o Exp_x)."""
    f = get_function(f, m) if isinstance(f, str) else f
    _require_derivatives(f, 2)
    x = np.asarray(x, dtype=float)
    return _tangent_hess(m, x, f.grad(x), f.hess(x))


def manifold_laplacian(m: EmbeddedManifold, f, x) -> float:
    """Laplace-Beltrami value (-div grad convention, nonnegative spectrum):
    minus the trace of the tangent Hessian."""
    return -float(np.trace(manifold_hessian(m, f, x)))


def weighted_laplacian(m: EmbeddedManifold, f, x, density, grad_log_density=None) -> float:
    """The density-weighted Laplacian Lap_{M,2} f = Lap_M f - 2 <grad log rho, grad_M f>.

    grad_log_density gives the tangent coefficients of grad_M log rho at x;
    omit it for a uniform density, where the drift term vanishes.
    """
    base = manifold_laplacian(m, f, x)
    if grad_log_density is None:
        if density is not None and density.kind != "uniform":
            raise ValueError("non-uniform density needs grad_log_density")
        return base
    gf = manifold_gradient(m, f, x)
    return base - 2.0 * float(np.dot(np.asarray(grad_log_density, dtype=float), gf))
