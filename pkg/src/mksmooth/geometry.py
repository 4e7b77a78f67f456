"""Differential-geometric primitives for the built-in embedded manifolds.

Two manifolds are built in: the circle of radius R in R^2 and the torus of
revolution in R^3 with major radius R and minor radius r (R > r > 0),
parameterized by

    circle:  theta        -> (R cos theta, R sin theta)
    torus:   (th1, th2)   -> ((R + r cos th2) cos th1,
                              (R + r cos th2) sin th1,
                              r sin th2)

Frame convention: circle tangent (-sin t, cos t); torus frame is the
normalized (d/dth1, d/dth2) pair, in that order.  These conventions are
deterministic and smooth along chart paths, and they commute with rotations
of the ambient space about the symmetry axis.

Densities may be specified either uniformly (w.r.t. the volume measure) or
through an angular density p(theta) w.r.t. d(theta); ``density_vol`` converts
to the volume-measure density rho(x) = p(theta(x)) / volume_form(theta(x)),
which is what every limit-variance formula consumes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp

from .errors import OffManifold, StepTooLarge, UnsupportedManifold

ON_MANIFOLD_TOL = 1e-9
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class EmbeddedManifold:
    """A built-in embedded manifold.

    Fields:
        kind: "circle" or "torus".
        radius: circle radius, or torus major radius R.
        minor: torus minor radius r (unused for the circle).
    """

    kind: str
    radius: float
    minor: float = 0.0

    def __post_init__(self):
        if self.kind == "circle":
            if not self.radius > 0:
                raise ValueError("circle radius must be positive")
        elif self.kind == "torus":
            if not (self.radius > self.minor > 0):
                raise ValueError("torus requires R > r > 0")
        else:
            raise UnsupportedManifold(f"unknown manifold kind {self.kind!r}")

    @property
    def d(self) -> int:
        """Intrinsic dimension."""
        return 1 if self.kind == "circle" else 2

    @property
    def D(self) -> int:
        """Ambient dimension."""
        return 2 if self.kind == "circle" else 3

    @property
    def volume(self) -> float:
        """Total volume (circumference / surface area)."""
        if self.kind == "circle":
            return TWO_PI * self.radius
        return 2.0 * TWO_PI * np.pi * self.radius * self.minor  # 4 pi^2 R r

    @property
    def injectivity_bound(self) -> float:
        """A safe lower bound on the injectivity radius."""
        if self.kind == "circle":
            return np.pi * self.radius
        # half the shortest closed geodesic: meridian (2 pi r) or inner
        # equator (2 pi (R - r)), whichever is shorter
        return np.pi * min(self.minor, self.radius - self.minor)


def circle(radius: float) -> EmbeddedManifold:
    return EmbeddedManifold("circle", float(radius))


def torus(major: float, minor: float) -> EmbeddedManifold:
    return EmbeddedManifold("torus", float(major), float(minor))


# --- charts ------------------------------------------------------------------

def reduce_angles(theta):
    """Reduce angles to [0, 2 pi)."""
    return np.mod(theta, TWO_PI)


def chart_embed(m: EmbeddedManifold, theta):
    """Map chart coordinates to ambient points.

    Args:
        m: manifold.
        theta: shape (d,) or (n, d) array of angles.

    Returns:
        Ambient coordinates, shape (D,) or (n, D) matching the input.
    """
    theta = np.asarray(theta, dtype=float)
    single = theta.ndim == 1
    th = np.atleast_2d(theta)
    if m.kind == "circle":
        t = th[:, 0]
        out = np.column_stack([m.radius * np.cos(t), m.radius * np.sin(t)])
    else:
        t1, t2 = th[:, 0], th[:, 1]
        ring = m.radius + m.minor * np.cos(t2)
        out = np.column_stack([ring * np.cos(t1), ring * np.sin(t1), m.minor * np.sin(t2)])
    return out[0] if single else out


def chart_invert(m: EmbeddedManifold, x):
    """Invert the chart map: ambient point(s) -> angles in [0, 2 pi)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if m.kind == "circle":
        th = reduce_angles(np.arctan2(pts[:, 1], pts[:, 0]))[:, None]
    else:
        t1 = np.arctan2(pts[:, 1], pts[:, 0])
        w = np.hypot(pts[:, 0], pts[:, 1]) - m.radius
        t2 = np.arctan2(pts[:, 2], w)
        th = reduce_angles(np.column_stack([t1, t2]))
    return th[0] if single else th


def on_manifold_residual(m: EmbeddedManifold, x) -> float:
    """Distance-like residual of the defining equation (0 when on-manifold)."""
    x = np.asarray(x, dtype=float)
    if m.kind == "circle":
        return abs(float(np.hypot(x[0], x[1])) - m.radius)
    w = float(np.hypot(x[0], x[1])) - m.radius
    return abs(w * w + float(x[2]) ** 2 - m.minor**2)


def require_on_manifold(m: EmbeddedManifold, x, tol: float = ON_MANIFOLD_TOL):
    res = on_manifold_residual(m, x)
    if res > tol:
        raise OffManifold(f"point {np.asarray(x)} off {m.kind} (residual {res:.3e} > {tol})")


# --- frames and curvature -----------------------------------------------------

def tangent_frame(m: EmbeddedManifold, x):
    """Orthonormal tangent frame J(x), a D x d matrix.

    Raises:
        OffManifold: x fails the on-manifold check.
    """
    require_on_manifold(m, x)
    theta = chart_invert(m, x)
    if m.kind == "circle":
        t = theta[0]
        return np.array([[-np.sin(t)], [np.cos(t)]])
    t1, t2 = theta
    e1 = np.array([-np.sin(t1), np.cos(t1), 0.0])
    e2 = np.array([-np.sin(t2) * np.cos(t1), -np.sin(t2) * np.sin(t1), np.cos(t2)])
    return np.column_stack([e1, e2])


def second_fundamental_form(m: EmbeddedManifold, x):
    """Second fundamental form b[i, j] = II_x(e_i, e_j), shape (d, d, D).

    Each b[i, j] is an ambient vector lying in the normal space at x;
    b is symmetric in (i, j) exactly.
    """
    require_on_manifold(m, x)
    theta = chart_invert(m, x)
    if m.kind == "circle":
        t = theta[0]
        b = np.zeros((1, 1, 2))
        b[0, 0] = -np.array([np.cos(t), np.sin(t)]) / m.radius
        return b
    t1, t2 = theta
    ring = m.radius + m.minor * np.cos(t2)
    normal = np.array([np.cos(t2) * np.cos(t1), np.cos(t2) * np.sin(t1), np.sin(t2)])
    b = np.zeros((2, 2, 3))
    b[0, 0] = -(np.cos(t2) / ring) * normal
    b[1, 1] = -(1.0 / m.minor) * normal
    return b


def ricci(m: EmbeddedManifold, x):
    """Ricci tensor at x in the tangent frame (d x d).

    A one-dimensional manifold is Ricci-flat; for a surface Ric = K g with K
    the Gauss curvature, which is cos(th2) / (r (R + r cos th2)) on the torus.
    """
    require_on_manifold(m, x)
    if m.kind == "circle":
        return np.zeros((1, 1))
    t2 = chart_invert(m, x)[1]
    gauss = np.cos(t2) / (m.minor * (m.radius + m.minor * np.cos(t2)))
    return gauss * np.eye(2)


def curvature_bias_coefficient(m: EmbeddedManifold, x) -> float:
    """The curvature coefficient c(x) in the small-bandwidth bias expansion

        T_eps[f](x) = rho f - (eps^2/2) [c(x) rho f + Lap_M(rho f)] + O(eps^{2+a}),

    given by c(x) = (1/3) tr Ric_x - (1/12) (||sum_i b_ii||^2 + 2 sum_ij ||b_ij||^2)
    (Gaussian fourth-moment identities applied to the quartic form ||II(z,z)||^2).
    For a circle of radius R this reduces to -1/(4 R^2).
    """
    ric = ricci(m, x)
    b = second_fundamental_form(m, x)
    mean_curv = b.trace(axis1=0, axis2=1)  # sum_i b_ii, ambient vector
    frob = float(np.sum(b * b))            # sum_ij ||b_ij||^2
    return float(np.trace(ric)) / 3.0 - (float(mean_curv @ mean_curv) + 2.0 * frob) / 12.0


# --- exponential map ----------------------------------------------------------

def _torus_geodesic(m: EmbeddedManifold, theta0, vel0, t_end):
    """Integrate the torus geodesic ODE in chart coordinates.

    With h(t2) = R + r cos t2 the geodesic equations are
        t1'' = -2 (h'/h) t1' t2',      t2'' = (h h'/r^2) t1'^2,
    h' = -r sin t2.  High-accuracy integration; oracle use only.
    """
    R, r = m.radius, m.minor

    def rhs(_, y):
        t2, dt1, dt2 = y[1], y[2], y[3]
        h = R + r * np.cos(t2)
        hp = -r * np.sin(t2)
        return [dt1, dt2, -2.0 * (hp / h) * dt1 * dt2, (h * hp / r**2) * dt1 * dt1]

    sol = solve_ivp(rhs, (0.0, t_end), [theta0[0], theta0[1], vel0[0], vel0[1]],
                    method="DOP853", rtol=1e-12, atol=1e-13, dense_output=False)
    if not sol.success:
        raise RuntimeError(f"geodesic integration failed: {sol.message}")
    return sol.y[:2, -1]


def exp_map(m: EmbeddedManifold, x, v):
    """Exponential map: follow the geodesic from x with tangent coefficients v.

    Args:
        m: manifold.
        x: ambient point on m.
        v: length-d coefficients in the frame of ``tangent_frame(m, x)``.

    Returns:
        Ambient coordinates of Exp_x(v).

    Raises:
        OffManifold: x off the manifold.
        StepTooLarge: ||v|| beyond the injectivity-radius bound.
    """
    require_on_manifold(m, x)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    speed = float(np.linalg.norm(v))
    if speed > m.injectivity_bound:
        raise StepTooLarge(f"|v| = {speed:.6g} exceeds injectivity bound {m.injectivity_bound:.6g}")
    theta = chart_invert(m, x)
    if speed == 0.0:
        return np.asarray(x, dtype=float).copy()
    if m.kind == "circle":
        return chart_embed(m, np.array([theta[0] + v[0] / m.radius]))
    ring = m.radius + m.minor * np.cos(theta[1])
    if v[0] == 0.0:
        # meridian circles are geodesics
        return chart_embed(m, np.array([theta[0], theta[1] + v[1] / m.minor]))
    if v[1] == 0.0 and abs(np.sin(theta[1])) < 1e-15:
        # inner/outer equators are geodesics
        return chart_embed(m, np.array([theta[0] + v[0] / ring, theta[1]]))
    vel0 = np.array([v[0] / ring, v[1] / m.minor])
    th_end = _torus_geodesic(m, theta, vel0, 1.0)
    return chart_embed(m, th_end)


# --- volume form and densities -------------------------------------------------

def volume_form(m: EmbeddedManifold, theta):
    """Chart density of the volume measure: dvol = volume_form(theta) d(theta).

    Circle: R.  Torus: r (R + r cos th2).
    """
    theta = np.asarray(theta, dtype=float)
    if m.kind == "circle":
        out = np.full(theta.shape[:-1] if theta.ndim > 1 else (), m.radius)
        return float(out) if out.ndim == 0 else out
    t2 = theta[..., 1]
    out = m.minor * (m.radius + m.minor * np.cos(t2))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class DensitySpec:
    """Sampling density specification.

    kind "uniform": uniform w.r.t. the volume measure.
    kind "vonmises_sine": angular density on the torus,
        p(th1, th2) proportional to
        exp(k1 cos(th1 - mu1) + k2 cos(th2 - mu2) + k3 sin(th1 - mu1) sin(th2 - mu2)),
    normalized over d(theta) (not dvol), matching the construction in which the
    density is imposed on the angles.
    """

    kind: str = "uniform"
    mu1: float = 0.0
    mu2: float = 0.0
    kappa1: float = 0.0
    kappa2: float = 0.0
    kappa3: float = 0.0

    def __post_init__(self):
        if self.kind not in ("uniform", "vonmises_sine"):
            raise ValueError(f"unknown density kind {self.kind!r}")


def uniform_density() -> DensitySpec:
    return DensitySpec("uniform")


def vonmises_sine(mu1=0.0, mu2=0.0, kappa1=0.0, kappa2=0.0, kappa3=0.0) -> DensitySpec:
    return DensitySpec("vonmises_sine", mu1, mu2, kappa1, kappa2, kappa3)


def vonmises_sine_exponent(spec: DensitySpec, theta):
    """The exponent of the sine-model density at angles theta (..., 2)."""
    theta = np.asarray(theta, dtype=float)
    d1 = theta[..., 0] - spec.mu1
    d2 = theta[..., 1] - spec.mu2
    return (spec.kappa1 * np.cos(d1) + spec.kappa2 * np.cos(d2)
            + spec.kappa3 * np.sin(d1) * np.sin(d2))


@lru_cache(maxsize=64)
def _vonmises_sine_normalizer(mu1, mu2, k1, k2, k3) -> float:
    """Normalizing constant Z = int exp(...) d(theta) by 256^2 trapezoid
    quadrature (the integrand is periodic, so equal-weight nodes are
    spectrally accurate)."""
    spec = DensitySpec("vonmises_sine", mu1, mu2, k1, k2, k3)
    res = 256
    t = np.linspace(0.0, TWO_PI, res, endpoint=False)
    t1, t2 = np.meshgrid(t, t, indexing="ij")
    grid = np.stack([t1, t2], axis=-1)
    return float(np.exp(vonmises_sine_exponent(spec, grid)).mean() * TWO_PI**2)


def vonmises_sine_normalizer(spec: DensitySpec) -> float:
    return _vonmises_sine_normalizer(spec.mu1, spec.mu2, spec.kappa1, spec.kappa2, spec.kappa3)


def density_chart(m: EmbeddedManifold, spec: DensitySpec, theta):
    """Angular density p(theta) w.r.t. d(theta), normalized to integrate to 1."""
    theta = np.asarray(theta, dtype=float)
    if spec.kind == "uniform":
        vf = volume_form(m, theta)
        return vf / m.volume
    if m.kind != "torus":
        raise UnsupportedManifold("vonmises_sine density is defined on the torus")
    return np.exp(vonmises_sine_exponent(spec, theta)) / vonmises_sine_normalizer(spec)


def density_vol(m: EmbeddedManifold, spec: DensitySpec, x):
    """Density rho(x) w.r.t. the volume measure at an ambient point x."""
    require_on_manifold(m, x)
    theta = chart_invert(m, x)
    if spec.kind == "uniform":
        return 1.0 / m.volume
    return float(density_chart(m, spec, theta) / volume_form(m, theta))
