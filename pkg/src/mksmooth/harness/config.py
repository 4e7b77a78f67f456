"""Experiment configuration: INI-style parsing, validation, serialization.

A config is flat key-value text with sections; every key has a default, so
the minimal config is just

    [experiment]
    kind = berry_circle

Validation is collected exhaustively: one failed parse reports every
unknown key, type mismatch (SchemaError) or out-of-range value
(RangeError) at once.  serialize_config materializes all defaults into a
canonical form whose SHA-256 is the config hash used for caching and
output provenance.
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from ..errors import RangeError, SchemaError
from ..functions import get_function
from ..geometry import (DensitySpec, EmbeddedManifold, circle, torus,
                        uniform_density, vonmises_sine)

EXPERIMENTS = ("berry_circle", "berry_torus", "rates", "laplacian", "hks", "regression")

_HALF_PI = math.pi / 2.0
_DEFAULT_POINTS = {
    "berry_circle": ((0.0,), (_HALF_PI,)),
    "berry_torus": ((0.0, math.pi), (3.0 * _HALF_PI, _HALF_PI)),
    # cos(theta) has critical points at theta = 0, pi; the Laplacian statistic's
    # limit variance is gradient-driven, so evaluate where the gradient is largest.
    "laplacian": ((_HALF_PI,),),
    "regression": ((math.pi / 4.0,),),
}
_DEFAULT_N = {"berry_circle": (500, 2000, 10000), "berry_torus": (500, 2000, 10000),
              "laplacian": (5000,), "hks": (3000,), "regression": (10000,)}
_DEFAULT_RADIUS = {"berry_circle": 5.0, "berry_torus": 0.5}
_DEFAULT_BANDWIDTH = {"rates": (0.4, 0.2, 0.1, 0.05), "laplacian": (0.1,)}
_DEFAULT_FUNCTION = {"berry_circle": "circle_expsin", "berry_torus": "torus_mix",
                     "rates": "cos_theta", "laplacian": "cos_theta",
                     "regression": "cos_theta"}

# keys recognized per experiment kind (beyond the base set)
_BASE_KEYS = {("experiment", "kind"), ("experiment", "root_seed"), ("output", "dir")}
_MANIFOLD_KEYS = {("manifold", "kind"), ("manifold", "radius"), ("manifold", "minor")}
_DENSITY_KEYS = {("density", "kind"), ("density", "mu1"), ("density", "mu2"),
                 ("density", "kappa1"), ("density", "kappa2"), ("density", "kappa3")}
_ALLOWED: Dict[str, set] = {
    "berry_circle": _BASE_KEYS | _MANIFOLD_KEYS | _DENSITY_KEYS | {
        ("experiment", "replicates"), ("function", "id"), ("points", "chart"),
        ("sweep", "n"), ("sweep", "bandwidth"), ("sweep", "centering")},
    "rates": _BASE_KEYS | _MANIFOLD_KEYS | {
        ("density", "kind"), ("function", "id"),
        ("sweep", "bandwidth"), ("sweep", "grid_points")},
    "laplacian": _BASE_KEYS | _MANIFOLD_KEYS | {
        ("experiment", "replicates"), ("density", "kind"), ("function", "id"),
        ("points", "chart"), ("sweep", "n"), ("sweep", "bandwidth"),
        ("sweep", "grid_points")},
    "hks": _BASE_KEYS | _MANIFOLD_KEYS | {
        ("density", "kind"), ("sweep", "n"), ("spectral", "eta"),
        ("spectral", "taus"), ("spectral", "eigenpairs"),
        ("spectral", "extend_points")},
    "regression": _BASE_KEYS | _MANIFOLD_KEYS | {
        ("experiment", "replicates"), ("density", "kind"), ("function", "id"),
        ("points", "chart"), ("sweep", "n"), ("sweep", "bandwidth"),
        ("sweep", "grid_points"), ("regression", "noise_sd"),
        ("regression", "clip"), ("regression", "fit_n"),
        ("regression", "fit_bandwidth")},
}
_ALLOWED["berry_torus"] = _ALLOWED["berry_circle"]


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    manifold: EmbeddedManifold
    density: DensitySpec
    f_id: str
    points: Tuple[Tuple[float, ...], ...]
    n_list: Tuple[int, ...]
    replicates: int
    bandwidth: Tuple[float, ...]        # empty tuple = auto rule
    root_seed: int
    out_dir: str
    grid_points: int
    centering: str                      # truth | population
    eta: float
    taus: Tuple[float, ...]
    eigenpairs: int
    extend_points: int
    noise_sd: float
    clip: float
    fit_n: int
    fit_bandwidth: float
    warnings: Tuple[str, ...] = field(default=(), compare=False)

    def epsilon_for(self, n: int) -> float:
        """Bandwidth for sample size n: the explicit value, or n^{-1/(d+1)}."""
        if not self.bandwidth:
            return float(n) ** (-1.0 / (self.manifold.d + 1))
        if len(self.bandwidth) == 1:
            return self.bandwidth[0]
        return self.bandwidth[self.n_list.index(n)]


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate config text, reporting every violation at once."""
    cp = configparser.ConfigParser(interpolation=None, strict=True)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise SchemaError(f"unparseable config: {exc}") from exc
    raw = {(sect, key): cp.get(sect, key).strip()
           for sect in cp.sections() for key in cp[sect]}

    schema_errs, range_errs = [], []

    kind = raw.get(("experiment", "kind"))
    if kind is None:
        raise SchemaError("missing required key [experiment] kind")
    if kind not in EXPERIMENTS:
        raise SchemaError(f"[experiment] kind = {kind!r} not one of {EXPERIMENTS}")

    for sect, key in sorted(raw):
        if (sect, key) not in _ALLOWED[kind]:
            schema_errs.append(f"unknown key [{sect}] {key} for experiment {kind}")

    def gets(sect, key, default, choices=None):
        val = raw.get((sect, key), default)
        if choices is not None and val not in choices:
            schema_errs.append(f"[{sect}] {key} = {val!r} not one of {sorted(choices)}")
            return default
        return val

    def geti(sect, key, default, lo=None, hi=None):
        txt = raw.get((sect, key))
        if txt is None:
            return default
        try:
            val = int(txt)
        except ValueError:
            schema_errs.append(f"[{sect}] {key} = {txt!r} is not an integer")
            return default
        if (lo is not None and val < lo) or (hi is not None and val > hi):
            range_errs.append(f"[{sect}] {key} = {val} outside [{lo}, {hi}]")
            return default
        return val

    def getf(sect, key, default, lo=None, strict_lo=False):
        txt = raw.get((sect, key))
        if txt is None:
            return default
        try:
            val = float(txt)
        except ValueError:
            schema_errs.append(f"[{sect}] {key} = {txt!r} is not a number")
            return default
        if lo is not None and (val < lo or (strict_lo and val == lo)):
            range_errs.append(f"[{sect}] {key} = {val} must be "
                              f"{'>' if strict_lo else '>='} {lo}")
            return default
        return val

    def getfs(sect, key, default, lo=None, strict_lo=False):
        txt = raw.get((sect, key))
        if txt is None:
            return default
        out = []
        for part in txt.split(","):
            part = part.strip()
            try:
                val = float(part)
            except ValueError:
                schema_errs.append(f"[{sect}] {key} entry {part!r} is not a number")
                continue
            if lo is not None and (val < lo or (strict_lo and val == lo)):
                range_errs.append(f"[{sect}] {key} entry {val} must be "
                                  f"{'>' if strict_lo else '>='} {lo}")
                continue
            out.append(val)
        return tuple(out) if out else default

    def getis(sect, key, default, lo):
        txt = raw.get((sect, key))
        if txt is None:
            return default
        out = []
        for part in txt.split(","):
            part = part.strip()
            try:
                val = int(part)
            except ValueError:
                schema_errs.append(f"[{sect}] {key} entry {part!r} is not an integer")
                continue
            if val < lo:
                range_errs.append(f"[{sect}] {key} entry {val} must be >= {lo}")
                continue
            out.append(val)
        return tuple(out) if out else default

    # --- manifold ---
    default_mkind = "torus" if kind == "berry_torus" else "circle"
    mkind_choices = {"circle", "torus"} if kind in ("berry_circle", "berry_torus", "rates") \
        else {"circle"}
    mkind = gets("manifold", "kind", default_mkind, mkind_choices)
    if kind == "berry_circle" and mkind != "circle":
        schema_errs.append("berry_circle runs on the circle")
        mkind = "circle"
    if kind == "berry_torus" and mkind != "torus":
        schema_errs.append("berry_torus runs on the torus")
        mkind = "torus"
    radius = getf("manifold", "radius", _DEFAULT_RADIUS.get(kind, 1.0), lo=0.0, strict_lo=True)
    minor = getf("manifold", "minor", 1.0 / 3.0, lo=0.0, strict_lo=True)
    if mkind == "circle" and ("manifold", "minor") in raw:
        schema_errs.append("[manifold] minor applies to the torus only")
    manifold = None
    try:
        manifold = circle(radius) if mkind == "circle" else torus(radius, minor)
    except ValueError as exc:
        range_errs.append(f"manifold: {exc}")

    # --- density ---
    default_dkind = "vonmises_sine" if kind == "berry_torus" else "uniform"
    dkind = gets("density", "kind", default_dkind, {"uniform", "vonmises_sine"})
    if dkind == "vonmises_sine" and mkind != "torus":
        schema_errs.append("vonmises_sine density requires the torus")
        dkind = "uniform"
    if dkind != "uniform" and kind in ("rates", "laplacian", "hks", "regression"):
        schema_errs.append(f"{kind} requires the uniform density")
        dkind = "uniform"
    warnings = []
    if dkind == "uniform":
        for s, k in _DENSITY_KEYS:
            if k != "kind" and (s, k) in raw:
                schema_errs.append(f"[density] {k} applies to vonmises_sine only")
        density = uniform_density()
    else:
        default_kappa = 1.0 if kind == "berry_torus" else 0.0
        kappa3 = getf("density", "kappa3", 0.0)
        if ("density", "kappa3") not in raw:
            warnings.append("kappa3 defaulted to 0 for the von Mises sine density")
        density = vonmises_sine(mu1=getf("density", "mu1", 0.0),
                                mu2=getf("density", "mu2", 0.0),
                                kappa1=getf("density", "kappa1", default_kappa, lo=0.0),
                                kappa2=getf("density", "kappa2", default_kappa, lo=0.0),
                                kappa3=kappa3)

    # --- function ---
    f_id = gets("function", "id", _DEFAULT_FUNCTION.get(kind, "one"))
    if manifold is not None:
        try:
            get_function(f_id, manifold)
        except (KeyError, ValueError) as exc:
            schema_errs.append(f"[function] id: {exc}")

    # --- points ---
    d = 2 if mkind == "torus" else 1
    points = _DEFAULT_POINTS.get(kind, ())
    if ("points", "chart") in raw:
        parsed = []
        for entry in raw[("points", "chart")].split(";"):
            entry = entry.strip()
            if not entry:
                continue
            try:
                pt = tuple(float(c) for c in entry.split(","))
            except ValueError:
                schema_errs.append(f"[points] chart entry {entry!r} is not numeric")
                continue
            if len(pt) != d:
                schema_errs.append(f"[points] chart entry {entry!r} must have {d} coordinates")
                continue
            parsed.append(pt)
        if parsed:
            points = tuple(parsed)

    # --- sweep / spectral / regression ---
    n_list = getis("sweep", "n", _DEFAULT_N.get(kind, ()), lo=30)
    replicates = geti("experiment", "replicates", 300, lo=30)
    bw_txt = raw.get(("sweep", "bandwidth"), "").strip()
    if not bw_txt or bw_txt == "auto":
        bandwidth = _DEFAULT_BANDWIDTH.get(kind, ())
    else:
        bandwidth = getfs("sweep", "bandwidth", (), lo=0.0, strict_lo=True)
        if bandwidth and kind != "rates" and len(bandwidth) not in (1, len(n_list)):
            schema_errs.append(f"[sweep] bandwidth needs 1 or {len(n_list)} values for "
                               f"n list of length {len(n_list)}, got {len(bandwidth)}")
    if kind == "rates" and not bandwidth:
        range_errs.append("[sweep] bandwidth for rates needs at least one positive value")

    cfg = ExperimentConfig(
        experiment=kind,
        manifold=manifold if manifold is not None else circle(1.0),
        density=density,
        f_id=f_id,
        points=points,
        n_list=n_list,
        replicates=replicates,
        bandwidth=bandwidth,
        root_seed=geti("experiment", "root_seed", 20240801, lo=0, hi=2**64 - 1),
        out_dir=gets("output", "dir", f"results/{kind}"),
        grid_points=geti("sweep", "grid_points", 64, lo=8),
        centering=gets("sweep", "centering",
                       "population" if kind == "berry_torus" else "truth",
                       {"truth", "population"}),
        eta=getf("spectral", "eta", 0.1, lo=0.0, strict_lo=True),
        taus=getfs("spectral", "taus", (0.5, 1.0), lo=0.0, strict_lo=True),
        eigenpairs=geti("spectral", "eigenpairs", 20, lo=2),
        extend_points=geti("spectral", "extend_points", 16, lo=1),
        noise_sd=getf("regression", "noise_sd", 0.1, lo=0.0, strict_lo=True),
        clip=getf("regression", "clip", 10.0, lo=0.0, strict_lo=True),
        fit_n=geti("regression", "fit_n", 5000, lo=30),
        fit_bandwidth=getf("regression", "fit_bandwidth", 0.05, lo=0.0, strict_lo=True),
        warnings=tuple(warnings),
    )

    if schema_errs:
        raise SchemaError("; ".join(schema_errs + range_errs))
    if range_errs:
        raise RangeError("; ".join(range_errs))
    return cfg


def _fmt(val) -> str:
    if isinstance(val, float):
        return repr(val)
    return str(val)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical config text with every default materialized; its parse is
    equal to cfg, and its SHA-256 identifies the run."""
    kind = cfg.experiment
    allowed = _ALLOWED[kind]
    m, dens = cfg.manifold, cfg.density
    values = {
        ("experiment", "kind"): kind,
        ("experiment", "root_seed"): cfg.root_seed,
        ("experiment", "replicates"): cfg.replicates,
        ("manifold", "kind"): m.kind,
        ("manifold", "radius"): m.radius,
        ("manifold", "minor"): m.minor,
        ("density", "kind"): dens.kind,
        ("density", "mu1"): dens.mu1,
        ("density", "mu2"): dens.mu2,
        ("density", "kappa1"): dens.kappa1,
        ("density", "kappa2"): dens.kappa2,
        ("density", "kappa3"): dens.kappa3,
        ("function", "id"): cfg.f_id,
        ("points", "chart"): " ; ".join(",".join(repr(c) for c in p) for p in cfg.points),
        ("sweep", "n"): ", ".join(str(n) for n in cfg.n_list),
        ("sweep", "bandwidth"): (", ".join(repr(b) for b in cfg.bandwidth)
                                 if cfg.bandwidth else "auto"),
        ("sweep", "grid_points"): cfg.grid_points,
        ("sweep", "centering"): cfg.centering,
        ("spectral", "eta"): cfg.eta,
        ("spectral", "taus"): ", ".join(repr(t) for t in cfg.taus),
        ("spectral", "eigenpairs"): cfg.eigenpairs,
        ("spectral", "extend_points"): cfg.extend_points,
        ("regression", "noise_sd"): cfg.noise_sd,
        ("regression", "clip"): cfg.clip,
        ("regression", "fit_n"): cfg.fit_n,
        ("regression", "fit_bandwidth"): cfg.fit_bandwidth,
        ("output", "dir"): cfg.out_dir,
    }
    if m.kind == "circle":
        del values[("manifold", "minor")]
    if dens.kind == "uniform":
        for sect, key in list(values):
            if sect == "density" and key != "kind":
                del values[(sect, key)]
    if kind == "rates":
        # rates has no n sweep; bandwidth is the sweep itself
        values[("sweep", "bandwidth")] = ", ".join(repr(b) for b in cfg.bandwidth)

    lines = []
    for sect in ("experiment", "manifold", "density", "function", "points",
                 "sweep", "spectral", "regression", "output"):
        keys = [k for (s, k) in values if s == sect and (s, k) in allowed]
        if not keys:
            continue
        lines.append(f"[{sect}]")
        for key in sorted(keys):
            lines.append(f"{key} = {_fmt(values[(sect, key)])}")
        lines.append("")
    return "\n".join(lines)


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()
