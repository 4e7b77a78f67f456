"""Experiment orchestration: the Monte Carlo normality studies and the
deterministic quadrature/spectral validations.

Every experiment is a pure function of its config: replicate b of sample
size index i draws its seed from derive_seed(root_seed, stream index), so
reruns are bit-identical and replicates can run on any number of threads.
Stream index layouts (documented in docs/formats.md):

    berry_*:    sample for (n index i, replicate b)   -> i * B + b
    laplacian:  grid sample -> 0; replicate b -> 1 + b
    hks:        sample -> 0
    regression: fit points -> 0, fit noise -> 1;
                replicate b points -> 2 + 2b, noise -> 3 + 2b

Population centering values (quadrature) are computed once per
(manifold, density, f, point, bandwidth) and cached in-process.
"""

from __future__ import annotations

import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .. import asymptotics as asym
from .._version import __version__
from ..derivatives import manifold_gradient, manifold_laplacian
from ..errors import MksmoothError
from ..functions import get_function
from ..geometry import (TWO_PI, chart_embed, curvature_bias_coefficient,
                        density_vol)
from ..kernels import Bandwidth
from ..sampling import (RegressionSpec, Sample, attach_regression, derive_seed,
                        sample_uniform, sample_vonmises_sine)
from ..smoothing import PopulationContext, population_smooth, smooth_normalized
from ..spectral import (build_reweighted_laplacian, eigendecompose,
                        hks_at_samples, hks_extend, pointwise_laplacian,
                        true_hks_circle, w_normalize)
from .config import ExperimentConfig, config_hash, serialize_config

RAW_HEADER = ("experiment", "point_id", "n", "epsilon", "statistic", "replicate", "value")
SUMMARY_HEADER = ("experiment", "manifold", "point_id", "theta1", "theta2",
                  "x1", "x2", "x3", "n", "epsilon", "statistic", "B", "center",
                  "centering", "sigma2", "emp_var", "ks", "value")

_center_cache: Dict[tuple, float] = {}


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    raw_rows: List[tuple] = field(default_factory=list)
    summary_rows: List[tuple] = field(default_factory=list)
    advisories: List[str] = field(default_factory=list)
    wall_time_s: float = 0.0
    status: str = "ok"

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    @property
    def sidecar(self) -> dict:
        return {
            "experiment": self.config.experiment,
            "config": serialize_config(self.config),
            "config_hash": self.config_hash,
            "version": __version__,
            "status": self.status,
            "advisories": list(self.advisories),
            "wall_time_s": self.wall_time_s,
        }


def _summary_row(cfg: ExperimentConfig, *, point_id="", theta=None, x=None, n="",
                 epsilon="", statistic="", b="", center="", centering="",
                 sigma2="", emp_var="", ks="", value="") -> tuple:
    theta = tuple(theta) if theta is not None else ()
    x = tuple(x) if x is not None else ()
    t1 = theta[0] if len(theta) > 0 else ""
    t2 = theta[1] if len(theta) > 1 else ""
    xs = list(x) + [""] * (3 - len(x))
    return (cfg.experiment, cfg.manifold.kind, point_id, t1, t2, xs[0], xs[1], xs[2],
            n, epsilon, statistic, b, center, centering, sigma2, emp_var, ks, value)


def _sample(cfg: ExperimentConfig, n: int, seed: int) -> Sample:
    if cfg.density.kind == "uniform":
        return sample_uniform(cfg.manifold, n, seed)
    dn = cfg.density
    return sample_vonmises_sine(cfg.manifold, dn.mu1, dn.mu2, dn.kappa1, dn.kappa2,
                                dn.kappa3, n, seed)


def _population_center(cfg: ExperimentConfig, f_id: str, point, bw: Bandwidth,
                       normalized: bool) -> float:
    m, dens = cfg.manifold, cfg.density
    key = (m.kind, m.radius, m.minor, dens, f_id, tuple(point), bw.epsilon, normalized)
    if key not in _center_cache:
        ctx = PopulationContext.auto(m, dens, bw.epsilon)
        x = chart_embed(m, np.asarray(point))
        _center_cache[key] = population_smooth(ctx, f_id, x, bw, normalized=normalized)
    return _center_cache[key]


def _replicate_map(fn, count: int, threads: int):
    if threads <= 1:
        return [fn(b) for b in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def _progress(quiet: bool, msg: str):
    if not quiet:
        print(msg, file=sys.stderr, flush=True)


def _bandwidth_advisories(cfg: ExperimentConfig, n: int, eps: float) -> List[str]:
    lo, hi = asym.bandwidth_window(n, cfg.manifold.d, cfg.manifold.injectivity_bound)
    if not lo < eps < hi:
        return [f"bandwidth {eps:.6g} at n={n} outside advisory window "
                f"({lo:.6g}, {hi:.6g}); normality may degrade"]
    return []


# --- berry_circle / berry_torus -------------------------------------------------

def _run_berry(cfg: ExperimentConfig, res: ExperimentResult, threads: int, quiet: bool):
    m, d = cfg.manifold, cfg.manifold.d
    f = get_function(cfg.f_id, m)
    b_count = cfg.replicates
    points = [chart_embed(m, np.asarray(p)) for p in cfg.points]
    for n_idx, n in enumerate(cfg.n_list):
        eps = cfg.epsilon_for(n)
        bw = Bandwidth(eps, d)
        res.advisories.extend(_bandwidth_advisories(cfg, n, eps))
        info = []
        for p_idx, (chart, x) in enumerate(zip(cfg.points, points)):
            fx = float(f(x[None, :])[0])
            rho = density_vol(m, cfg.density, x)
            gnorm = float(np.linalg.norm(manifold_gradient(m, f, x)))
            if cfg.centering == "truth":
                c_u, c_n = rho * fx, fx
            else:
                c_u = _population_center(cfg, cfg.f_id, chart, bw, normalized=False)
                c_n = _population_center(cfg, cfg.f_id, chart, bw, normalized=True)
            s2_u = asym.sigma_unnormalized(rho, fx, d).sigma2
            s2_n = asym.sigma_normalized(rho, gnorm, d).sigma2
            info.append((chart, x, c_u, c_n, s2_u, s2_n))

        def one(b: int):
            s = _sample(cfg, n, derive_seed(cfg.root_seed, n_idx * b_count + b))
            out = []
            for (chart, x, c_u, c_n, _, _) in info:
                out.append((asym.standardized_statistic("unnormalized", s, f, x, bw, c_u),
                            asym.standardized_statistic("normalized", s, f, x, bw, c_n)))
            return out

        stats = _replicate_map(one, b_count, threads)
        _progress(quiet, f"[{cfg.experiment}] n={n}: {b_count} replicates done")
        for p_idx, (chart, x, c_u, c_n, s2_u, s2_n) in enumerate(info):
            vals_u = np.array([stats[b][p_idx][0] for b in range(b_count)])
            vals_n = np.array([stats[b][p_idx][1] for b in range(b_count)])
            for b in range(b_count):
                res.raw_rows.append((cfg.experiment, p_idx, n, eps, "unnormalized", b, vals_u[b]))
                res.raw_rows.append((cfg.experiment, p_idx, n, eps, "normalized", b, vals_n[b]))
            for kind, vals, center, s2 in (("unnormalized", vals_u, c_u, s2_u),
                                           ("normalized", vals_n, c_n, s2_n)):
                res.summary_rows.append(_summary_row(
                    cfg, point_id=p_idx, theta=chart, x=x, n=n, epsilon=eps,
                    statistic=kind, b=b_count, center=center, centering=cfg.centering,
                    sigma2=s2, emp_var=float(np.var(vals, ddof=1)),
                    ks=asym.ks_distance(vals, s2)))


# --- rates -----------------------------------------------------------------------

def _rates_grid(cfg: ExperimentConfig) -> np.ndarray:
    g = cfg.grid_points
    if cfg.manifold.d == 1:
        return np.linspace(0.0, TWO_PI, g, endpoint=False)[:, None]
    # torus: spread g points with a golden-angle second coordinate
    k = np.arange(g)
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    return np.column_stack([TWO_PI * k / g, TWO_PI * ((k * golden) % 1.0)])


def _run_rates(cfg: ExperimentConfig, res: ExperimentResult, threads: int, quiet: bool):
    m = cfg.manifold
    f = get_function(cfg.f_id, m)
    thetas = _rates_grid(cfg)
    xs = chart_embed(m, thetas)
    rho = density_vol(m, cfg.density, xs[0])     # uniform: constant
    targets = []
    for g in range(xs.shape[0]):
        x = xs[g]
        fx = float(f(x[None, :])[0])
        lap = manifold_laplacian(m, f, x)
        cx = curvature_bias_coefficient(m, x)
        targets.append((fx, lap, cx))
    sups_n, sups_u = [], []
    for eps in cfg.bandwidth:
        bw = Bandwidth(eps, m.d)
        ctx = PopulationContext.auto(m, cfg.density, eps)
        res_n_max = res_u_max = 0.0
        for g in range(xs.shape[0]):
            x = xs[g]
            fx, lap, cx = targets[g]
            pop_n = population_smooth(ctx, f, x, bw, normalized=True)
            pop_u = population_smooth(ctx, f, x, bw, normalized=False)
            r_n = pop_n - fx + 0.5 * eps * eps * lap
            r_u = pop_u - rho * fx + 0.5 * eps * eps * (cx * rho * fx + rho * lap)
            res.raw_rows.append((cfg.experiment, g, "", eps, "residual_normalized", "", r_n))
            res.raw_rows.append((cfg.experiment, g, "", eps, "residual_unnormalized", "", r_u))
            res_n_max = max(res_n_max, abs(r_n))
            res_u_max = max(res_u_max, abs(r_u))
        sups_n.append(res_n_max)
        sups_u.append(res_u_max)
        res.summary_rows.append(_summary_row(cfg, epsilon=eps,
                                             statistic="sup_residual_normalized",
                                             value=res_n_max))
        res.summary_rows.append(_summary_row(cfg, epsilon=eps,
                                             statistic="sup_residual_unnormalized",
                                             value=res_u_max))
        _progress(quiet, f"[rates] eps={eps}: sup residuals "
                         f"{res_n_max:.3e} (norm) {res_u_max:.3e} (unnorm)")
    log_eps = np.log(np.asarray(cfg.bandwidth))
    for name, sups in (("slope_normalized", sups_n), ("slope_unnormalized", sups_u)):
        slope = float(np.polyfit(log_eps, np.log(np.asarray(sups)), 1)[0])
        res.summary_rows.append(_summary_row(cfg, statistic=name, value=slope))


# --- laplacian -------------------------------------------------------------------

def _run_laplacian(cfg: ExperimentConfig, res: ExperimentResult, threads: int, quiet: bool):
    m, d = cfg.manifold, cfg.manifold.d
    f = get_function(cfg.f_id, m)
    n = cfg.n_list[0]
    eps = cfg.epsilon_for(n)
    bw = Bandwidth(eps, d)
    res.advisories.extend(_bandwidth_advisories(cfg, n, eps))

    s0 = _sample(cfg, n, derive_seed(cfg.root_seed, 0))
    thetas = np.linspace(0.0, TWO_PI, cfg.grid_points, endpoint=False)[:, None]
    xs = chart_embed(m, thetas)
    max_err = 0.0
    for g in range(cfg.grid_points):
        x = xs[g]
        val = pointwise_laplacian(s0, f, x, bw)
        target = manifold_laplacian(m, f, x)
        max_err = max(max_err, abs(val - target))
        res.raw_rows.append((cfg.experiment, g, n, eps, "laplacian_grid", "", val))
        res.raw_rows.append((cfg.experiment, g, n, eps, "laplacian_target", "", target))
    res.summary_rows.append(_summary_row(cfg, n=n, epsilon=eps,
                                         statistic="grid_max_error", value=max_err))
    _progress(quiet, f"[laplacian] grid max error {max_err:.4f}")

    wide = Bandwidth(math.sqrt(2.0) * eps, d)
    scale_norm = math.sqrt(n * eps ** (d - 2))
    b_count = cfg.replicates
    for p_idx, chart in enumerate(cfg.points):
        x = chart_embed(m, np.asarray(chart))
        fx = float(f(x[None, :])[0])
        rho = density_vol(m, cfg.density, x)
        gnorm = float(np.linalg.norm(manifold_gradient(m, f, x)))
        tbar_pop = _population_center(cfg, cfg.f_id, chart, wide, normalized=True)
        lap_hat = (fx - tbar_pop) / eps**2

        def one(b: int):
            s = _sample(cfg, n, derive_seed(cfg.root_seed, 1 + b))
            lap_stat = asym.standardized_statistic("laplacian", s, f, x, bw, lap_hat)
            norm_stat = scale_norm * (smooth_normalized(s, f, x, wide) - tbar_pop)
            return lap_stat, norm_stat + lap_stat

        out = _replicate_map(one, b_count, threads)
        lap_stats = np.array([o[0] for o in out])
        gaps = np.array([o[1] for o in out])
        for b in range(b_count):
            res.raw_rows.append((cfg.experiment, p_idx, n, eps, "laplacian_stat", b,
                                 lap_stats[b]))
            res.raw_rows.append((cfg.experiment, p_idx, n, eps, "identity_gap", b, gaps[b]))
        # exact algebra: the L statistic is minus the normalized statistic at
        # kernel bandwidth sqrt(2) eps, so its limit variance carries the
        # (eps / sqrt(2) eps)^{d-2} = 2^{(2-d)/2} scale factor
        s2 = 2.0 ** ((2 - d) / 2.0) * asym.sigma_normalized(rho, gnorm, d).sigma2
        res.summary_rows.append(_summary_row(
            cfg, point_id=p_idx, theta=chart, x=x, n=n, epsilon=eps,
            statistic="laplacian_stat", b=b_count, center=lap_hat,
            centering="population", sigma2=s2,
            emp_var=float(np.var(lap_stats, ddof=1)),
            ks=asym.ks_distance(lap_stats, s2)))
        res.summary_rows.append(_summary_row(
            cfg, point_id=p_idx, theta=chart, x=x, n=n, epsilon=eps,
            statistic="identity_max_gap", b=b_count,
            value=float(np.max(np.abs(gaps)))))
        _progress(quiet, f"[laplacian] point {p_idx}: {b_count} replicates done")


# --- hks -------------------------------------------------------------------------

def _run_hks(cfg: ExperimentConfig, res: ExperimentResult, threads: int, quiet: bool):
    m, d = cfg.manifold, cfg.manifold.d
    n = cfg.n_list[0]
    eta = cfg.eta
    thresh = (math.log(n) / n) ** (1.0 / (4 * d + 13))
    if thresh > eta:
        res.advisories.append(
            f"spectral bandwidth eta={eta:.6g} below the (log n / n)^(1/(4d+13)) "
            f"= {thresh:.6g} guidance at n={n}; eigenvalue accuracy may degrade")
    s = _sample(cfg, n, derive_seed(cfg.root_seed, 0))
    gl = build_reweighted_laplacian(s, eta)
    dec = w_normalize(eigendecompose(gl, cfg.eigenpairs), s, eta)
    for j, mu in enumerate(dec.eigenvalues):
        res.raw_rows.append((cfg.experiment, "", n, eta, "eigenvalue", j, float(mu)))
    for name, j in (("mu1", 1), ("mu2", 2)):
        if j < len(dec.eigenvalues):
            res.summary_rows.append(_summary_row(
                cfg, n=n, epsilon=eta, statistic=name,
                center=1.0 / m.radius**2, value=float(dec.eigenvalues[j])))
    ext_thetas = (np.arange(cfg.extend_points) + 0.5) * TWO_PI / cfg.extend_points
    ext_xs = chart_embed(m, ext_thetas[:, None])
    bw = Bandwidth(eta, d)
    for tau in cfg.taus:
        hks = hks_at_samples(dec, tau)
        truth = true_hks_circle(m.radius, tau)
        tag = f"tau={tau!r}"
        for i in range(n):
            res.raw_rows.append((cfg.experiment, "", n, eta, f"hks:{tag}", i,
                                 float(hks[i])))
        max_rel_ext = 0.0
        for g in range(cfg.extend_points):
            ext = hks_extend(s, hks, ext_xs[g], bw)
            max_rel_ext = max(max_rel_ext, abs(ext - truth) / truth)
            res.raw_rows.append((cfg.experiment, g, n, eta, f"hks_extend:{tag}", "", ext))
        res.summary_rows.append(_summary_row(
            cfg, n=n, epsilon=eta, statistic=f"hks_mean:{tag}", center=truth,
            value=float(np.mean(hks))))
        res.summary_rows.append(_summary_row(
            cfg, n=n, epsilon=eta, statistic=f"hks_extend_maxrel:{tag}",
            center=truth, value=max_rel_ext))
        _progress(quiet, f"[hks] tau={tau}: mean {np.mean(hks):.5f} vs truth {truth:.5f}")


# --- regression ------------------------------------------------------------------

def _run_regression(cfg: ExperimentConfig, res: ExperimentResult, threads: int, quiet: bool):
    m, d = cfg.manifold, cfg.manifold.d
    g_fn = get_function(cfg.f_id, m)
    reg = RegressionSpec(cfg.f_id, noise_sd=cfg.noise_sd, clip=cfg.clip)

    fit_bw = Bandwidth(cfg.fit_bandwidth, d)
    s_fit = attach_regression(_sample(cfg, cfg.fit_n, derive_seed(cfg.root_seed, 0)),
                              reg, derive_seed(cfg.root_seed, 1))
    from ..smoothing import nw_regress
    thetas = np.linspace(0.0, TWO_PI, cfg.grid_points, endpoint=False)[:, None]
    xs = chart_embed(m, thetas)
    max_err = 0.0
    for g in range(cfg.grid_points):
        fit = nw_regress(s_fit, xs[g], fit_bw)
        target = float(g_fn(xs[g][None, :])[0])
        max_err = max(max_err, abs(fit - target))
        res.raw_rows.append((cfg.experiment, g, cfg.fit_n, cfg.fit_bandwidth,
                             "fit_grid", "", fit))
    res.summary_rows.append(_summary_row(cfg, n=cfg.fit_n, epsilon=cfg.fit_bandwidth,
                                         statistic="fit_max_error", value=max_err))
    _progress(quiet, f"[regression] fit grid max error {max_err:.4f}")

    n = cfg.n_list[0]
    eps = cfg.epsilon_for(n)
    bw = Bandwidth(eps, d)
    res.advisories.extend(_bandwidth_advisories(cfg, n, eps))
    chart = cfg.points[0]
    x = chart_embed(m, np.asarray(chart))
    rho = density_vol(m, cfg.density, x)
    center = _population_center(cfg, cfg.f_id, chart, bw, normalized=True)
    s2 = asym.sigma_regression(rho, cfg.noise_sd**2, d).sigma2
    b_count = cfg.replicates

    def one(b: int):
        sx = _sample(cfg, n, derive_seed(cfg.root_seed, 2 + 2 * b))
        sy = attach_regression(sx, reg, derive_seed(cfg.root_seed, 3 + 2 * b))
        return asym.standardized_statistic("regression", sy, None, x, bw, center)

    stats = np.array(_replicate_map(one, b_count, threads))
    for b in range(b_count):
        res.raw_rows.append((cfg.experiment, 0, n, eps, "regression_stat", b, stats[b]))
    res.summary_rows.append(_summary_row(
        cfg, point_id=0, theta=chart, x=x, n=n, epsilon=eps,
        statistic="regression_stat", b=b_count, center=center,
        centering="population", sigma2=s2, emp_var=float(np.var(stats, ddof=1)),
        ks=asym.ks_distance(stats, s2)))
    _progress(quiet, f"[regression] {b_count} replicates done")


_RUNNERS = {
    "berry_circle": _run_berry,
    "berry_torus": _run_berry,
    "rates": _run_rates,
    "laplacian": _run_laplacian,
    "hks": _run_hks,
    "regression": _run_regression,
}


def run_experiment(cfg: ExperimentConfig, threads: int = 1, quiet: bool = True,
                   flush_dir: Optional[str] = None) -> ExperimentResult:
    """Run the configured experiment deterministically.

    With flush_dir set, a failure mid-run still writes the rows collected so
    far, with the sidecar status recording the error, before re-raising.
    """
    res = ExperimentResult(config=cfg)
    res.advisories.extend(cfg.warnings)
    start = time.perf_counter()
    try:
        _RUNNERS[cfg.experiment](cfg, res, threads, quiet)
    except MksmoothError as exc:
        res.status = f"failed: {exc}"
        res.wall_time_s = time.perf_counter() - start
        if flush_dir is not None:
            from .io import write_results
            write_results(res, flush_dir)
        raise
    res.wall_time_s = time.perf_counter() - start
    for w in res.advisories:
        _progress(quiet, f"[advisory] {w}")
    return res
