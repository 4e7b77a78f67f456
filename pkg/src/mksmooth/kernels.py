"""Gaussian kernel and its moment identities.

The kernel is fixed to the Gaussian

    K_eps(u) = (2 pi eps^2)^(-d/2) exp(-u^2 / (2 eps^2)),   u >= 0,

normalized so that the integral of K_eps(|u|) over R^d equals 1.  All limit
variance constants in the package assume this kernel, so the interface is
sealed: no other kernel families are accepted.

``kernel_moment`` returns the closed forms of the moment identities used by
the bias and variance computations.  Writing K for the bandwidth-1 kernel and
A for a symmetric d x d matrix:

    quad        : int K(|z|) z^T A z dz           = tr A
    quad_sq     : int K(|z|) (z^T A z)^2 dz       = 2 ||A||_F^2 + (tr A)^2
    outer_quad  : int K(|z|) (z z^T - I)(z^T A z) = 2 A
    sq_mass     : int K^2(|z|) dz                 = (4 pi)^(-d/2)
    sq_quad     : int K^2(|z|) z^T A z dz         = tr A / (2 (4 pi)^(d/2))
    sq_quad_sq  : int K^2(|z|) (z^T A z)^2 dz     = (2||A||_F^2 + (tr A)^2) / (4 (4 pi)^(d/2))
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnknownMoment

MOMENT_KINDS = ("quad", "quad_sq", "outer_quad", "sq_mass", "sq_quad", "sq_quad_sq")


@dataclass(frozen=True)
class Bandwidth:
    """Kernel bandwidth eps > 0 with the intrinsic dimension d used in the
    normalization exponent."""

    epsilon: float
    d: int

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"bandwidth must be positive, got {self.epsilon}")
        if self.d not in (1, 2):
            raise ValueError(f"intrinsic dimension must be 1 or 2, got {self.d}")


def kernel_eval(u, bw: Bandwidth):
    """Evaluate K_eps at distance(s) u >= 0.

    Args:
        u: scalar or array of nonnegative distances.
        bw: bandwidth (eps, d).

    Returns:
        (2 pi eps^2)^(-d/2) exp(-u^2/(2 eps^2)), same shape as u.
    """
    u = np.asarray(u, dtype=float)
    eps = bw.epsilon
    norm = (2.0 * np.pi * eps * eps) ** (-bw.d / 2.0)
    return norm * np.exp(-(u * u) / (2.0 * eps * eps))


def _check_symmetric(A, d):
    A = np.asarray(A, dtype=float)
    if A.shape != (d, d):
        raise ValueError(f"A must be {d}x{d}, got shape {A.shape}")
    if not np.allclose(A, A.T, atol=1e-12, rtol=0.0):
        raise ValueError("A must be symmetric")
    return A


def kernel_moment(which: str, d: int, A=None):
    """Closed-form kernel moments for the bandwidth-1 Gaussian kernel.

    Args:
        which: one of MOMENT_KINDS (see module docstring).
        d: dimension of the integration variable z.
        A: symmetric d x d matrix, required by the A-dependent moments.

    Returns:
        Scalar for all kinds except ``outer_quad``, which returns a d x d
        matrix.

    Raises:
        UnknownMoment: unrecognized ``which``.
        ValueError: missing or non-symmetric A.
    """
    if which == "sq_mass":
        return (4.0 * np.pi) ** (-d / 2.0)
    if which not in MOMENT_KINDS:
        raise UnknownMoment(f"unknown kernel moment {which!r}; expected one of {MOMENT_KINDS}")
    if A is None:
        raise ValueError(f"moment {which!r} requires a symmetric matrix A")
    A = _check_symmetric(A, d)
    tr = float(np.trace(A))
    frob2 = float(np.sum(A * A))
    if which == "quad":
        return tr
    if which == "quad_sq":
        return 2.0 * frob2 + tr * tr
    if which == "outer_quad":
        return 2.0 * A
    if which == "sq_quad":
        return tr / (2.0 * (4.0 * np.pi) ** (d / 2.0))
    if which == "sq_quad_sq":
        return (2.0 * frob2 + tr * tr) / (4.0 * (4.0 * np.pi) ** (d / 2.0))
    raise UnknownMoment(f"unknown kernel moment {which!r}")
