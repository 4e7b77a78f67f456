"""Derivative estimators against finite differences and analytic frame algebra."""

import numpy as np
import pytest

from mksmooth import (Bandwidth, PopulationContext, ambient_grad_T,
                      ambient_hess_T, chart_embed, circle, exp_map,
                      grad_normalized, grad_unnormalized, hess_normalized,
                      hess_unnormalized, kernel_eval, manifold_gradient,
                      manifold_hessian, manifold_laplacian,
                      population_grad_normalized, population_grad_unnormalized,
                      population_hess_normalized, sample_uniform,
                      smooth_normalized, smooth_unnormalized, tangent_frame,
                      torus, uniform_density, weighted_laplacian)
from mksmooth.geometry import DensitySpec
from mksmooth.sampling import Sample

UNIT = circle(1.0)
TORUS = torus(0.5, 1.0 / 3.0)
FD_H = 1e-5
FD_REL = 1e-6


def _fd_grad(fun, x, h=FD_H):
    x = np.asarray(x, dtype=float)
    out = np.empty(x.size)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h
        out[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return out


def _fd_jacobian(vfun, x, h=FD_H):
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h
        cols.append((vfun(x + e) - vfun(x - e)) / (2 * h))
    return np.stack(cols, axis=1)


def _configs():
    """20 (sample, function id, point, bandwidth) tuples across both manifolds."""
    cfgs = []
    sc = sample_uniform(UNIT, 400, seed=41)
    for fid in ("cos_theta", "circle_expsin"):
        for t in (0.3, 2.0, 4.4):
            for eps in (0.15, 0.3):
                cfgs.append((sc, fid, chart_embed(UNIT, np.array([t])), Bandwidth(eps, 1)))
    st = sample_uniform(TORUS, 400, seed=43)
    for fid in ("x3", "torus_mix"):
        for th in ((0.5, 1.1), (3.0, 4.2)):
            for eps in (0.15, 0.25):
                cfgs.append((st, fid, chart_embed(TORUS, np.array(th)), Bandwidth(eps, TORUS.d)))
    return cfgs


def test_ambient_grad_matches_finite_differences():
    cfgs = _configs()
    assert len(cfgs) == 20
    for s, fid, x, bw in cfgs:
        got = ambient_grad_T(s, fid, x, bw)
        want = _fd_grad(lambda p: smooth_unnormalized(s, fid, p, bw), x)
        assert np.linalg.norm(got - want) <= FD_REL * np.linalg.norm(want)


def test_ambient_hess_matches_finite_differences():
    for s, fid, x, bw in _configs():
        got = ambient_hess_T(s, fid, x, bw)
        want = _fd_jacobian(lambda p: ambient_grad_T(s, fid, p, bw), x)
        assert np.linalg.norm(got - want) <= FD_REL * np.linalg.norm(want)


def test_normalized_grad_matches_frame_projected_finite_differences():
    """Tangent gradient coefficients equal J^T (ambient FD gradient of Tbar)."""
    for s, fid, x, bw in _configs()[::4]:
        got = grad_normalized(s, fid, x, bw)
        amb = _fd_grad(lambda p: smooth_normalized(s, fid, p, bw), x)
        want = tangent_frame(s.manifold, x).T @ amb
        assert np.linalg.norm(got - want) <= 1e-5 * max(1.0, np.linalg.norm(want))


def test_sample_hessians_via_geodesic_second_differences():
    """hess entries are second derivatives of the estimator along exp_map
    geodesics (checked where closed-form geodesics exist)."""
    h = 1e-4
    cases = []
    s = sample_uniform(UNIT, 300, seed=47)
    x = chart_embed(UNIT, np.array([1.2]))
    cases.append((s, x, 0))                      # circle: any direction
    st = sample_uniform(TORUS, 300, seed=53)
    xm = chart_embed(TORUS, np.array([0.7, 2.1]))
    cases.append((st, xm, 1))                    # torus meridian direction
    xe = chart_embed(TORUS, np.array([0.7, 0.0]))
    cases.append((st, xe, 0))                    # torus outer equator direction
    for s, x, i in cases:
        m = s.manifold
        bw = Bandwidth(0.35, m.d)
        v = np.zeros(m.d)
        v[i] = h
        for estimator, matrix in ((smooth_unnormalized, hess_unnormalized),
                                  (smooth_normalized, hess_normalized)):
            f0 = estimator(s, "x1", x, bw)
            fp = estimator(s, "x1", exp_map(m, x, v), bw)
            fm = estimator(s, "x1", exp_map(m, x, -v), bw)
            want = (fp - 2 * f0 + fm) / h**2
            assert matrix(s, "x1", x, bw)[i, i] == pytest.approx(want, abs=1e-5)


def test_constant_function_has_zero_normalized_derivatives():
    s = sample_uniform(TORUS, 200, seed=59)
    x = chart_embed(TORUS, np.array([1.0, 2.0]))
    bw = Bandwidth(0.3, 2)
    f = np.full(200, 5.5)
    assert np.linalg.norm(grad_normalized(s, f, x, bw)) <= 1e-10
    assert np.linalg.norm(hess_normalized(s, f, x, bw)) <= 1e-10


def test_normalized_derivatives_shift_invariant():
    rng = np.random.default_rng(61)
    s = sample_uniform(UNIT, 150, seed=67)
    f = rng.normal(size=150)
    x, bw = chart_embed(UNIT, np.array([0.8])), Bandwidth(0.25, 1)
    g0, h0 = grad_normalized(s, f, x, bw), hess_normalized(s, f, x, bw)
    g1, h1 = grad_normalized(s, f + 7.0, x, bw), hess_normalized(s, f + 7.0, x, bw)
    assert np.allclose(g0, g1, atol=1e-12)
    assert np.allclose(h0, h1, atol=1e-12)


def test_rotation_invariance_of_tangent_coefficients():
    """Rotating sample, point, and function together leaves the tangent-frame
    gradient/Hessian coefficients unchanged (circle in-plane rotation)."""
    s = sample_uniform(UNIT, 120, seed=71)
    alpha = 1.234
    q = np.array([[np.cos(alpha), -np.sin(alpha)], [np.sin(alpha), np.cos(alpha)]])
    fvals = np.sin(3 * s.chart[:, 0])
    srot = Sample(s.points @ q.T, s.chart + alpha, UNIT, DensitySpec("uniform"), 0, "manual")
    x = chart_embed(UNIT, np.array([2.2]))
    bw = Bandwidth(0.3, 1)
    for op in (grad_unnormalized, hess_unnormalized, grad_normalized, hess_normalized):
        base = op(s, fvals, x, bw)
        rot = op(srot, fvals, q @ x, bw)
        assert np.allclose(base, rot, atol=1e-12)


def test_single_point_closed_forms():
    """n=1 with X_1 = x: gradient vanishes, ambient Hessian is -K(0)/eps^{d+2} I."""
    x = chart_embed(UNIT, np.array([0.9]))
    s = Sample(x[None, :], np.array([[0.9]]), UNIT, DensitySpec("uniform"), 0, "manual")
    bw = Bandwidth(0.5, 1)
    assert np.allclose(ambient_grad_T(s, "one", x, bw), 0.0)
    k0 = float(kernel_eval(0.0, Bandwidth(1.0, 1)))
    want = -k0 / bw.epsilon**3 * np.eye(2)
    assert np.allclose(ambient_hess_T(s, "one", x, bw), want, rtol=1e-14)


# --- analytic frame algebra -------------------------------------------------------

def test_manifold_derivatives_circle_closed_forms():
    for t in (0.0, 0.7, 2.5, 4.0):
        x = chart_embed(UNIT, np.array([t]))
        assert manifold_gradient(UNIT, "cos_theta", x)[0] == pytest.approx(-np.sin(t), abs=1e-12)
        assert manifold_hessian(UNIT, "cos_theta", x)[0, 0] == pytest.approx(-np.cos(t), abs=1e-12)
        assert manifold_laplacian(UNIT, "cos_theta", x) == pytest.approx(np.cos(t), abs=1e-12)


def test_manifold_derivatives_torus_closed_forms():
    """f = x3 = r sin(th2): grad = (0, cos th2); Lap f (nonnegative-spectrum
    convention) = sin th2 cos th2 / (R + r cos th2) + sin th2 / r."""
    big_r, small_r = 0.5, 1.0 / 3.0
    for th in ((0.3, 0.9), (2.0, 2.8), (5.0, 4.1)):
        t2 = th[1]
        x = chart_embed(TORUS, np.array(th))
        grad = manifold_gradient(TORUS, "x3", x)
        assert np.allclose(grad, [0.0, np.cos(t2)], atol=1e-12)
        want = np.sin(t2) * np.cos(t2) / (big_r + small_r * np.cos(t2)) + np.sin(t2) / small_r
        assert manifold_laplacian(TORUS, "x3", x) == pytest.approx(want, abs=1e-12)


def test_weighted_laplacian():
    x = chart_embed(UNIT, np.array([0.6]))
    base = manifold_laplacian(UNIT, "cos_theta", x)
    assert weighted_laplacian(UNIT, "cos_theta", x, uniform_density()) == base
    drift = np.array([0.25])
    got = weighted_laplacian(UNIT, "cos_theta", x, None, grad_log_density=drift)
    assert got == pytest.approx(base - 2 * 0.25 * (-np.sin(0.6)), abs=1e-12)
    with pytest.raises(ValueError):
        weighted_laplacian(UNIT, "cos_theta", x, DensitySpec("vonmises_sine"))


def test_manifold_derivatives_need_closed_form():
    with pytest.raises(ValueError):
        manifold_gradient(UNIT, lambda X: X[:, 0], np.array([1.0, 0.0]))


# --- population limits ------------------------------------------------------------

def test_population_derivatives_converge_to_manifold_truth():
    """Normalized population gradient/Hessian approach the analytic tangent
    values as eps -> 0, with log-log slope >= 1.7."""
    cases = [(UNIT, "circle_expsin", [(0.5,), (2.4,), (3.9,), (5.6,)], (0.2, 0.1, 0.05)),
             # tube radius 1/3: start the torus sweep inside the asymptotic regime
             (TORUS, "torus_mix", [(0.4, 1.0), (2.6, 4.0)], (0.1, 0.05, 0.025))]
    for m, fid, thetas, eps_grid in cases:
        sup_g, sup_h = [], []
        for eps in eps_grid:
            ctx = PopulationContext.auto(m, uniform_density(), eps)
            bw = Bandwidth(eps, m.d)
            eg = eh = 0.0
            for th in thetas:
                x = chart_embed(m, np.array(th))
                eg = max(eg, float(np.max(np.abs(
                    population_grad_normalized(ctx, fid, x, bw)
                    - manifold_gradient(m, fid, x)))))
                eh = max(eh, float(np.max(np.abs(
                    population_hess_normalized(ctx, fid, x, bw)
                    - manifold_hessian(m, fid, x)))))
            sup_g.append(eg)
            sup_h.append(eh)
        le = np.log(eps_grid)
        assert np.polyfit(le, np.log(sup_g), 1)[0] >= 1.7
        assert np.polyfit(le, np.log(sup_h), 1)[0] >= 1.7


def test_gradient_noise_shrinks_with_sample_doubling():
    """Doubling n scales the stochastic gradient error by ~2^{-1/2}: the median
    sup-error factor over 20 replicate pairs lies in [0.6, 0.85]."""
    bw = Bandwidth(0.1, 1)
    ctx = PopulationContext.auto(UNIT, uniform_density(), 0.1)
    pts = [chart_embed(UNIT, np.array([t]))
           for t in np.linspace(0.0, 2 * np.pi, 8, endpoint=False)]
    pop = [population_grad_unnormalized(ctx, "cos_theta", x, bw) for x in pts]

    def sup_err(n, seed):
        s = sample_uniform(UNIT, n, seed=seed)
        return max(abs(grad_unnormalized(s, "cos_theta", x, bw)[0] - p[0])
                   for x, p in zip(pts, pop))

    ratios = [sup_err(4000, 9000 + rep) / sup_err(2000, 8000 + rep)
              for rep in range(20)]
    assert 0.6 <= float(np.median(ratios)) <= 0.85
