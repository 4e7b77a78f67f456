"""Closed-form limit variances, standardized statistics, and distribution distances."""

import math

import numpy as np
import pytest
from scipy import stats

from mksmooth import (Bandwidth, PopulationContext, bandwidth_window,
                      chart_embed, circle, find_critical_points, ks_distance,
                      mahalanobis_ball_distance, population_smooth,
                      sample_uniform, scaling_factor, sigma_critical,
                      sigma_normalized, sigma_regression, sigma_unnormalized,
                      smooth_unnormalized, standardized_statistic, torus,
                      uniform_density)
from mksmooth.asymptotics import STATISTIC_KINDS, StandardizedSample
from mksmooth.errors import DegenerateVariance

UNIT = circle(1.0)
RHO = 1.0 / (2.0 * math.pi)
ROOT_4PI = math.sqrt(4.0 * math.pi)


def test_limit_variance_closed_forms():
    assert sigma_unnormalized(1.0, 1.0, 1).sigma2 == pytest.approx(1.0 / ROOT_4PI, rel=1e-15)
    assert sigma_normalized(RHO, 1.0, 1).sigma2 == pytest.approx(math.pi / ROOT_4PI, rel=1e-15)
    assert sigma_critical(1.0, 1.0, 1.0, 1).sigma2 == pytest.approx(
        3.0 / (16.0 * ROOT_4PI), rel=1e-15)
    assert sigma_regression(RHO, 0.01, 1).sigma2 == pytest.approx(
        0.01 * 2.0 * math.pi / ROOT_4PI, rel=1e-15)
    # d = 2 replaces sqrt(4 pi) by 4 pi
    assert sigma_unnormalized(1.0, 1.0, 2).sigma2 == pytest.approx(
        1.0 / (4.0 * math.pi), rel=1e-15)


def test_limit_variance_homogeneity():
    base = sigma_unnormalized(RHO, 0.7, 1).sigma2
    assert sigma_unnormalized(RHO, 2.1, 1).sigma2 == pytest.approx(9.0 * base, rel=1e-12)
    assert sigma_unnormalized(3.0 * RHO, 0.7, 1).sigma2 == pytest.approx(3.0 * base, rel=1e-12)
    gbase = sigma_normalized(RHO, 0.5, 1).sigma2
    assert sigma_normalized(RHO, 1.0, 1).sigma2 == pytest.approx(4.0 * gbase, rel=1e-12)
    assert sigma_normalized(2.0 * RHO, 0.5, 1).sigma2 == pytest.approx(gbase / 2.0, rel=1e-12)


def test_limit_variance_degeneracies():
    with pytest.raises(DegenerateVariance):
        sigma_unnormalized(RHO, 0.0, 1)
    with pytest.raises(DegenerateVariance):
        sigma_normalized(RHO, 0.0, 1)
    with pytest.raises(DegenerateVariance):
        sigma_critical(RHO, 0.0, 1.0, 1)
    with pytest.raises(DegenerateVariance):
        sigma_regression(RHO, 0.0, 1)
    with pytest.raises(ValueError):
        sigma_unnormalized(0.0, 1.0, 1)
    with pytest.raises(ValueError):
        sigma_normalized(-1.0, 1.0, 1)


def test_scaling_factors():
    n, eps = 10_000, 0.1
    assert scaling_factor("unnormalized", n, eps, 1) == pytest.approx(math.sqrt(1000.0))
    assert scaling_factor("regression", n, eps, 1) == pytest.approx(math.sqrt(1000.0))
    assert scaling_factor("normalized", n, eps, 1) == pytest.approx(math.sqrt(100_000.0))
    assert scaling_factor("critical", n, eps, 1) == pytest.approx(math.sqrt(100_000.0) / eps)
    assert scaling_factor("laplacian", n, eps, 1) == pytest.approx(math.sqrt(10.0))
    assert scaling_factor("normalized", n, eps, 2) == pytest.approx(math.sqrt(n))
    with pytest.raises(ValueError):
        scaling_factor("median", n, eps, 1)


def test_standardized_statistic_definition():
    s = sample_uniform(UNIT, 500, seed=3)
    x, bw = chart_embed(UNIT, np.array([1.0])), Bandwidth(0.2, 1)
    est = smooth_unnormalized(s, "cos_theta", x, bw)
    got = standardized_statistic("unnormalized", s, "cos_theta", x, bw, center=0.0)
    assert got == pytest.approx(math.sqrt(500 * 0.2) * est, rel=1e-14)
    assert standardized_statistic("unnormalized", s, "cos_theta", x, bw, center=est) == 0.0
    with pytest.raises(ValueError):
        standardized_statistic("mode", s, "cos_theta", x, bw, center=0.0)


def test_standardized_sample_validation():
    ss = StandardizedSample(np.zeros(7), "normalized", "population", 100, 0.1)
    assert ss.b == 7
    with pytest.raises(ValueError):
        StandardizedSample(np.array([1.0, np.nan]), "normalized", "truth", 100, 0.1)


def test_empirical_variance_tripwire():
    """B=200 standardized unnormalized replicates: empirical variance within
    a factor 2 of the closed-form limit."""
    x = chart_embed(UNIT, np.array([1.0]))
    bw = Bandwidth(0.1, 1)
    ctx = PopulationContext.auto(UNIT, uniform_density(), 0.1)
    center = population_smooth(ctx, "cos_theta", x, bw)
    vals = []
    for rep in range(200):
        s = sample_uniform(UNIT, 2000, seed=30_000 + rep)
        vals.append(standardized_statistic("unnormalized", s, "cos_theta", x, bw, center))
    emp = float(np.var(vals, ddof=1))
    s2 = sigma_unnormalized(RHO, math.cos(1.0), 1).sigma2
    assert 0.5 * s2 <= emp <= 2.0 * s2


def test_ks_distance_plug_in_quantiles():
    b = 100
    sigma = 1.7
    xs = sigma * stats.norm.ppf((np.arange(1, b + 1) - 0.5) / b)
    assert ks_distance(xs, sigma**2) == pytest.approx(1.0 / (2 * b), abs=1e-12)


def test_ks_distance_single_observation_and_scale():
    assert ks_distance([0.0], 1.0) == pytest.approx(0.5, abs=1e-15)
    rng = np.random.default_rng(8)
    xs = rng.normal(size=400)
    assert ks_distance(2.0 * xs, 4.0) == pytest.approx(ks_distance(xs, 1.0), abs=1e-15)
    with pytest.raises(DegenerateVariance):
        ks_distance(xs, 0.0)


def test_ks_distance_against_scipy():
    rng = np.random.default_rng(21)
    xs = 1.3 * rng.normal(size=500)
    want = stats.kstest(xs, lambda t: stats.norm.cdf(t / 1.3)).statistic
    assert ks_distance(xs, 1.69) == pytest.approx(float(want), abs=1e-12)


def test_mahalanobis_reduces_to_half_normal_ks():
    rng = np.random.default_rng(34)
    xs = 0.8 * rng.normal(size=300)
    got = mahalanobis_ball_distance(xs, [0.64])
    r = np.sort(np.abs(xs) / 0.8)
    cdf = np.array([math.erf(v / math.sqrt(2.0)) for v in r])
    steps = np.arange(1, 301) / 300.0
    want = max(np.max(steps - cdf), np.max(cdf - (steps - 1.0 / 300.0)))
    assert got == pytest.approx(want, abs=1e-12)


def test_mahalanobis_two_dimensional():
    rng = np.random.default_rng(55)
    xs = rng.normal(size=(2000, 2)) * np.array([1.0, 3.0])
    assert mahalanobis_ball_distance(xs, [1.0, 9.0]) <= 0.05
    with pytest.raises(ValueError):
        mahalanobis_ball_distance(xs, [1.0])
    with pytest.raises(DegenerateVariance):
        mahalanobis_ball_distance(xs, [1.0, 0.0])


def test_find_critical_points_exact_functions():
    roots = find_critical_points(UNIT, "cos_theta")
    assert len(roots) == 2
    assert abs(roots[0] - 0.0) <= 1e-12
    assert abs(roots[1] - math.pi) <= 1e-12
    roots = find_critical_points(UNIT, "x2")           # sin theta
    assert len(roots) == 2
    assert abs(roots[0] - math.pi / 2) <= 1e-12
    assert abs(roots[1] - 3 * math.pi / 2) <= 1e-12


def test_find_critical_points_expsin():
    """Roots of d/dtheta [exp(sin(cos t)) + sin t] located to 1e-11."""

    def fprime(t):
        return math.cos(t) - math.sin(t) * math.cos(math.cos(t)) * math.exp(
            math.sin(math.cos(t)))

    roots = find_critical_points(UNIT, "circle_expsin")
    assert len(roots) >= 2
    for r in roots:
        assert abs(fprime(r)) <= 1e-11
    with pytest.raises(ValueError):
        find_critical_points(torus(0.5, 1.0 / 3.0), "torus_mix")


def test_bandwidth_window():
    lo, hi = bandwidth_window(10_000, 1, math.pi)
    assert lo == pytest.approx(math.log(10_000) / 10_000, rel=1e-12)
    assert hi == math.pi
    lo2, _ = bandwidth_window(10_000, 2, 0.3)
    assert lo2 == pytest.approx(math.sqrt(math.log(10_000) / 10_000), rel=1e-12)
    lo3, _ = bandwidth_window(10_000, 1, 0.3, delta=1e-10)
    assert lo3 == pytest.approx(math.log(1e10) / 10_000, rel=1e-12)


def test_statistic_kinds_enumeration():
    assert set(STATISTIC_KINDS) == {"unnormalized", "normalized", "critical",
                                    "laplacian", "regression"}
