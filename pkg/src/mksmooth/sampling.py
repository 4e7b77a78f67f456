"""Seeded i.i.d. samplers for the built-in manifolds.

Randomness contract: every sampler builds one numpy PCG64 generator from its
seed and draws from it in a fixed order, so identical (sampler, params, seed)
yields bit-identical output on every run.  Replicate streams are derived from
a root seed with ``derive_seed`` (splitmix64; documented bit-exactly in
docs/formats.md) so replicate-parallel execution is schedule-independent.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import MissingResponses, SamplerStalled, UnsupportedManifold
from .functions import AmbientFunction, get_function
from .geometry import (TWO_PI, DensitySpec, EmbeddedManifold, chart_embed,
                       vonmises_sine_exponent)

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
PROPOSAL_CAP_FACTOR = 10**6


def derive_seed(root_seed: int, replicate_index: int) -> int:
    """Derive the seed for one replicate from a root seed.

    splitmix64: state = (root_seed + k * 0x9E3779B97F4A7C15) mod 2^64, then
    z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
    z *= 0x94D049BB133111EB; z ^= z >> 31.
    The increment is odd and the finalizer is a bijection, so outputs are
    collision-free in the replicate index for any fixed root.
    """
    z = (int(root_seed) + int(replicate_index) * _GOLDEN) & _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


@dataclass
class Sample:
    """An i.i.d. sample from a manifold density.

    Fields:
        points: (n, D) ambient coordinates.
        chart: (n, d) chart angles that generated the points.
        y: optional length-n responses.
        meta: provenance (manifold, density, seed, sampler id, n).
    """

    points: np.ndarray
    chart: np.ndarray
    manifold: EmbeddedManifold
    density: DensitySpec
    seed: int
    sampler: str
    y: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.points.shape[0]


def _generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def sample_uniform(m: EmbeddedManifold, n: int, seed: int) -> Sample:
    """Sample n points uniformly w.r.t. the volume measure.

    Circle: angles Uniform[0, 2 pi).  Torus: th1 Uniform, th2 by rejection
    with the constant envelope R + r over the marginal ~ R + r cos(th2).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _generator(seed)
    if m.kind == "circle":
        theta = (TWO_PI * rng.random(n))[:, None]
    else:
        t1 = TWO_PI * rng.random(n)
        t2 = _rejection_scalar(
            rng, n,
            accept_prob=lambda t: (m.radius + m.minor * np.cos(t)) / (m.radius + m.minor),
        )
        theta = np.column_stack([t1, t2])
    return Sample(chart_embed(m, theta), theta, m, DensitySpec("uniform"), int(seed), "uniform")


def _rejection_scalar(rng, n, accept_prob):
    """Draw n angles from a density on [0, 2 pi) via rejection; fixed draw order."""
    out = np.empty(n)
    got = 0
    proposals = 0
    cap = PROPOSAL_CAP_FACTOR * n
    while got < n:
        chunk = max(1024, 2 * (n - got))
        t = TWO_PI * rng.random(chunk)
        u = rng.random(chunk)
        acc = t[u <= accept_prob(t)]
        take = min(acc.size, n - got)
        out[got:got + take] = acc[:take]
        got += take
        proposals += chunk
        if proposals > cap and got < n:
            raise SamplerStalled(f"rejection sampler exceeded {cap} proposals")
    return out


def sample_vonmises_sine(m: EmbeddedManifold, mu1, mu2, kappa1, kappa2, kappa3,
                         n: int, seed: int) -> Sample:
    """Sample angle pairs from the bivariate sine model on the torus,

        p(th1, th2) propto exp(k1 cos(th1-mu1) + k2 cos(th2-mu2)
                               + k3 sin(th1-mu1) sin(th2-mu2)),

    by rejection from Uniform^2 with the constant envelope
    exp(k1 + k2 + |k3|).  The density is w.r.t. d(theta), not dvol.
    """
    if m.kind != "torus":
        raise UnsupportedManifold("vonmises_sine sampling is defined on the torus")
    if n < 1:
        raise ValueError("n must be >= 1")
    spec = DensitySpec("vonmises_sine", float(mu1), float(mu2),
                       float(kappa1), float(kappa2), float(kappa3))
    bound = spec.kappa1 + spec.kappa2 + abs(spec.kappa3)
    rng = _generator(seed)
    out = np.empty((n, 2))
    got = 0
    proposals = 0
    cap = PROPOSAL_CAP_FACTOR * n
    while got < n:
        chunk = max(1024, 2 * (n - got))
        th = TWO_PI * rng.random((chunk, 2))
        u = rng.random(chunk)
        acc = th[u <= np.exp(vonmises_sine_exponent(spec, th) - bound)]
        take = min(acc.shape[0], n - got)
        out[got:got + take] = acc[:take]
        got += take
        proposals += chunk
        if proposals > cap and got < n:
            raise SamplerStalled(f"rejection sampler exceeded {cap} proposals")
    return Sample(chart_embed(m, out), out, m, spec, int(seed), "vonmises_sine",
                  meta={"proposals": proposals})


@dataclass(frozen=True)
class RegressionSpec:
    """Synthetic response model y = g(X) + noise, truncated to [-clip, clip].

    g may be a function id from the registry or a callable on ambient coords.
    """

    g: Union[str, Callable, AmbientFunction]
    noise_sd: float = 0.0
    clip: float = 10.0

    def resolve(self, m: EmbeddedManifold) -> Callable:
        if isinstance(self.g, str):
            return get_function(self.g, m)
        return self.g


def attach_regression(s: Sample, spec: RegressionSpec, seed: int) -> Sample:
    """Return a copy of s with responses y_i = clamp(g(X_i) + xi_i, +-clip),
    xi_i ~ Normal(0, noise_sd^2) i.i.d. from the given seed."""
    if s.y is not None:
        raise ValueError("sample already has responses")
    if not spec.clip > 0:
        raise ValueError("clip bound must be positive")
    if spec.noise_sd < 0:
        raise ValueError("noise_sd must be nonnegative")
    g = spec.resolve(s.manifold)
    rng = _generator(seed)
    y = np.asarray(g(s.points), dtype=float)
    if spec.noise_sd > 0:
        y = y + spec.noise_sd * rng.standard_normal(s.n)
    y = np.clip(y, -spec.clip, spec.clip)
    return Sample(s.points, s.chart, s.manifold, s.density, s.seed, s.sampler,
                  y=y, meta=dict(s.meta))


def sample_to_csv(s: Sample, path) -> None:
    """Write a sample as CSV with columns x1..xD, theta1..thetad[, y]."""
    D = s.points.shape[1]
    d = s.chart.shape[1]
    header = [f"x{i+1}" for i in range(D)] + [f"theta{i+1}" for i in range(d)]
    if s.y is not None:
        header.append("y")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(s.n):
            row = [repr(float(v)) for v in s.points[i]]
            row += [repr(float(v)) for v in s.chart[i]]
            if s.y is not None:
                row.append(repr(float(s.y[i])))
            w.writerow(row)


def require_responses(s: Sample) -> np.ndarray:
    if s.y is None:
        raise MissingResponses("sample has no responses; use attach_regression")
    return s.y
