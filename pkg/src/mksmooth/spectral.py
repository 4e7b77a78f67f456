"""Graph Laplacians, spectral decomposition, and the heat kernel signature.

Both Laplacians share the scale convention L = (I - D^{-1} A)/beta^2 where
the affinity uses kernel bandwidth sqrt(2)*beta (the sqrt(2) removes a
factor 1/2 from the generator limit):

    plain:      A_ij = K_{sqrt(2) eps}(|X_i - X_j|)          -> weighted Laplacian
    reweighted: W_ij = A_ij / (q(X_i) q(X_j)),  q = A row sums -> Laplace-Beltrami

Row i of the plain Laplacian applied to sampled values of f is exactly
(f(X_i) - Tbar_{n, sqrt(2) eps}[f](X_i)) / eps^2, the pointwise estimator.

Eigenpairs come from the symmetric conjugate S = D^{-1/2} A D^{-1/2}
(similar to D^{-1}A, so the spectrum is real and L's is >= 0); eigenvectors
map back through D^{-1/2}.  For comparison with L^2(vol)-normalized
eigenfunctions, the w-norm reweights by (Euclidean eta-ball volume)/(number
of sample neighbors), a Monte Carlo estimate of the volume integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import ConvergenceFailure, DegenerateDenominator, EmptyBall
from .kernels import Bandwidth, kernel_eval
from .sampling import Sample
from .smoothing import DENOM_FLOOR, FunctionLike, function_values, smooth_normalized

LAPLACIAN_KINDS = ("plain", "reweighted")


def _pairwise_sq_dists(points: np.ndarray) -> np.ndarray:
    sq = np.sum(points * points, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)


@dataclass(frozen=True)
class AffinityMatrix:
    matrix: np.ndarray          # (n, n) symmetric positive
    kernel_bandwidth: float     # sqrt(2) * beta
    kind: str                   # plain | reweighted


@dataclass(frozen=True)
class GraphLaplacian:
    matrix: np.ndarray          # (n, n), rows sum to 0
    degrees: np.ndarray         # affinity row sums
    scale: float                # beta: eps (plain) or eta (reweighted)
    affinity: AffinityMatrix

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def pointwise_laplacian(s: Sample, f, x, bw: Bandwidth, f_at_x: Optional[float] = None) -> float:
    """Pointwise weighted-Laplacian estimate (f(x) - Tbar_{n,sqrt(2) eps}[f](x))/eps^2.

    f_at_x supplies f(x) when f is an array of sampled values; a callable or
    registry id is evaluated at x directly.
    """
    if f_at_x is None:
        if isinstance(f, (np.ndarray, list)):
            raise ValueError("precomputed sample values need an explicit f_at_x")
        from .functions import get_function
        fn = get_function(f, s.manifold) if isinstance(f, str) else f
        f_at_x = float(np.asarray(fn(np.asarray(x, dtype=float)[None, :]), dtype=float)[0])
    wide = Bandwidth(math.sqrt(2.0) * bw.epsilon, bw.d)
    return (f_at_x - smooth_normalized(s, f, x, wide)) / bw.epsilon**2


def _assemble(s: Sample, beta: float, reweight: bool) -> GraphLaplacian:
    if s.n < 2:
        raise ValueError("graph Laplacian needs at least two sample points")
    wide = Bandwidth(math.sqrt(2.0) * beta, s.manifold.d)
    a = kernel_eval(np.sqrt(_pairwise_sq_dists(s.points)), wide)
    kind = "plain"
    if reweight:
        q = np.sum(a, axis=1)
        a = a / np.outer(q, q)
        kind = "reweighted"
    deg = np.sum(a, axis=1)
    if not np.all(deg > DENOM_FLOOR):
        raise DegenerateDenominator("a graph row has numerically zero kernel mass")
    lap = -a / deg[:, None]
    np.fill_diagonal(lap, lap.diagonal() + 1.0)
    lap /= beta**2
    return GraphLaplacian(lap, deg, beta, AffinityMatrix(a, wide.epsilon, kind))


def build_rw_laplacian(s: Sample, epsilon: float) -> GraphLaplacian:
    """Random-walk graph Laplacian (I - D^{-1} K_{sqrt(2) eps}) / eps^2."""
    return _assemble(s, float(epsilon), reweight=False)


def build_reweighted_laplacian(s: Sample, eta: float) -> GraphLaplacian:
    """Kernel-normalized Laplacian from the density-cancelling affinity
    W_ij = K_{sqrt(2) eta}(|X_i - X_j|)/(q(X_i) q(X_j))."""
    return _assemble(s, float(eta), reweight=True)


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray     # (N,) ascending, >= -1e-8
    vectors: np.ndarray         # (n, N) columns
    normalization: str          # euclidean | w-norm
    scale: float                # the Laplacian's beta


def eigendecompose(gl: GraphLaplacian, num_pairs: int) -> SpectralDecomposition:
    """Lowest num_pairs eigenpairs of gl via its symmetric conjugate.

    Eigenvectors are mapped back by D^{-1/2}, unit-euclidean-normalized, and
    sign-fixed so each column's largest-magnitude entry is positive.
    """
    if not 1 <= num_pairs <= gl.n:
        raise ValueError(f"num_pairs must be in [1, {gl.n}], got {num_pairs}")
    inv_sqrt = 1.0 / np.sqrt(gl.degrees)
    sym = gl.affinity.matrix * np.outer(inv_sqrt, inv_sqrt)
    lap_sym = -sym
    np.fill_diagonal(lap_sym, lap_sym.diagonal() + 1.0)
    lap_sym /= gl.scale**2
    try:
        mu, u = scipy.linalg.eigh(lap_sym, subset_by_index=(0, num_pairs - 1))
    except scipy.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"symmetric eigensolver failed: {exc}") from exc
    v = u * inv_sqrt[:, None]
    v /= np.sqrt(np.sum(v * v, axis=0))[None, :]
    flips = np.sign(v[np.argmax(np.abs(v), axis=0), np.arange(v.shape[1])])
    v *= flips[None, :]
    return SpectralDecomposition(mu, v, "euclidean", gl.scale)


def w_normalize(dec: SpectralDecomposition, s: Sample, eta: float) -> SpectralDecomposition:
    """Rescale eigenvectors to unit w-norm, |v|_w^2 = sum_i w_i v(i)^2 with
    w_i = vol(eta-ball in R^d) / #{j : |X_i - X_j| <= eta} (self included).

    The w-norm Monte Carlo approximates the L^2(vol) norm, matching the
    eigenvectors with unit-norm eigenfunctions.
    """
    if dec.normalization != "euclidean":
        raise ValueError("w_normalize expects a euclidean-normalized decomposition")
    d2 = _pairwise_sq_dists(s.points)
    counts = np.sum(d2 <= eta * eta, axis=1)
    if np.any(counts == 0):
        raise EmptyBall(f"{int(np.sum(counts == 0))} sample points have empty eta-balls")
    ball = 2.0 * eta if s.manifold.d == 1 else math.pi * eta * eta
    w = ball / counts
    norms = np.sqrt(np.sum(w[:, None] * dec.vectors**2, axis=0))
    return replace(dec, vectors=dec.vectors / norms[None, :], normalization="w-norm")


def hks_at_samples(dec: SpectralDecomposition, tau: float,
                   num_pairs: Optional[int] = None) -> np.ndarray:
    """Heat kernel signature H(X_i) = sum_{j<N} exp(-tau mu_j) v_j(i)^2."""
    if dec.normalization != "w-norm":
        raise ValueError("HKS needs a w-normalized decomposition")
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    avail = dec.vectors.shape[1]
    num_pairs = avail if num_pairs is None else int(num_pairs)
    if not 1 <= num_pairs <= avail:
        raise ValueError(f"num_pairs must be in [1, {avail}], got {num_pairs}")
    # Clamp tiny negative eigenvalues and accumulate terms in a fixed order:
    # every term is >= 0 and nonincreasing in tau, so the partial sums are
    # exactly (bitwise) nondecreasing in num_pairs and nonincreasing in tau.
    weights = np.exp(-tau * np.maximum(dec.eigenvalues[:num_pairs], 0.0))
    out = np.zeros(dec.vectors.shape[0])
    for j in range(num_pairs):
        out += weights[j] * dec.vectors[:, j] ** 2
    return out


def hks_extend(s: Sample, hks_values, x, bw: Bandwidth) -> float:
    """Extend sampled HKS values off-sample by normalized kernel smoothing."""
    return smooth_normalized(s, np.asarray(hks_values, dtype=float), x, bw)


def true_hks_circle(radius: float, tau: float, tol: float = 1e-12) -> float:
    """Closed-form circle HKS: 1/(2 pi R) + (1/(pi R)) sum_k exp(-k^2 tau / R^2),
    truncated when the next term drops below tol.  Constant in position."""
    if not (radius > 0 and tau > 0):
        raise ValueError("radius and tau must be positive")
    total = 1.0 / (2.0 * math.pi * radius)
    k = 1
    while True:
        term = math.exp(-(k * k) * tau / (radius * radius)) / (math.pi * radius)
        if term < tol:
            return total
        total += term
        k += 1
