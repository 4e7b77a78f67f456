"""Built-in test functions on ambient coordinates, with analytic derivatives.

Each function is defined on the ambient space R^D and restricted to the
manifold by evaluation.  Analytic ambient gradients and Hessians back the
derivative estimators' oracles and the closed-form variance ingredients.

Registry:
    one           : f = 1 (any D)
    coordinate_k  : f = x_k (any D), k in {1..3} -> ids "x1", "x2", "x3"
    cos_theta     : f = x1 / R on a circle of radius R (equals cos theta)
    circle_expsin : f = exp(sin x1) + x2 (the circle experiment function)
    torus_mix     : f = sin(x1 - x2) + exp(-cos(x1 + x2)) + x3^2
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .geometry import EmbeddedManifold


@dataclass(frozen=True)
class AmbientFunction:
    """A scalar function of ambient coordinates with optional derivatives.

    value/grad/hess accept arrays shaped (..., D); grad returns (..., D) and
    hess returns (..., D, D).
    """

    fid: str
    value: Callable
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None

    def __call__(self, X):
        return self.value(np.asarray(X, dtype=float))


def _one(X):
    return np.ones(X.shape[:-1])


def _one_grad(X):
    return np.zeros(X.shape)


def _one_hess(X):
    D = X.shape[-1]
    return np.zeros(X.shape[:-1] + (D, D))


def _coord(k):
    def value(X):
        return X[..., k]

    def grad(X):
        g = np.zeros(X.shape)
        g[..., k] = 1.0
        return g

    return value, grad


def _circle_expsin_value(X):
    return np.exp(np.sin(X[..., 0])) + X[..., 1]


def _circle_expsin_grad(X):
    g = np.zeros(X.shape)
    x1 = X[..., 0]
    g[..., 0] = np.cos(x1) * np.exp(np.sin(x1))
    g[..., 1] = 1.0
    return g


def _circle_expsin_hess(X):
    D = X.shape[-1]
    H = np.zeros(X.shape[:-1] + (D, D))
    x1 = X[..., 0]
    H[..., 0, 0] = (np.cos(x1) ** 2 - np.sin(x1)) * np.exp(np.sin(x1))
    return H


def _torus_mix_value(X):
    s = X[..., 0] + X[..., 1]
    dd = X[..., 0] - X[..., 1]
    return np.sin(dd) + np.exp(-np.cos(s)) + X[..., 2] ** 2


def _torus_mix_grad(X):
    s = X[..., 0] + X[..., 1]
    dd = X[..., 0] - X[..., 1]
    e = np.sin(s) * np.exp(-np.cos(s))
    g = np.zeros(X.shape)
    g[..., 0] = np.cos(dd) + e
    g[..., 1] = -np.cos(dd) + e
    g[..., 2] = 2.0 * X[..., 2]
    return g


def _torus_mix_hess(X):
    s = X[..., 0] + X[..., 1]
    dd = X[..., 0] - X[..., 1]
    ge = (np.cos(s) + np.sin(s) ** 2) * np.exp(-np.cos(s))
    H = np.zeros(X.shape[:-1] + (3, 3))
    H[..., 0, 0] = -np.sin(dd) + ge
    H[..., 0, 1] = np.sin(dd) + ge
    H[..., 1, 0] = H[..., 0, 1]
    H[..., 1, 1] = -np.sin(dd) + ge
    H[..., 2, 2] = 2.0
    return H


def get_function(fid: str, m: Optional[EmbeddedManifold] = None) -> AmbientFunction:
    """Look up a built-in function by id.

    ``cos_theta`` needs the manifold (a circle) to fix its radius.
    """
    if fid == "one":
        return AmbientFunction("one", _one, _one_grad, _one_hess)
    if fid in ("x1", "x2", "x3"):
        k = int(fid[1]) - 1
        value, grad = _coord(k)
        return AmbientFunction(fid, value, grad, _one_hess)
    if fid == "cos_theta":
        if m is None or m.kind != "circle":
            raise ValueError("cos_theta requires a circle manifold")
        R = m.radius
        value, grad = _coord(0)
        return AmbientFunction(
            "cos_theta",
            lambda X: X[..., 0] / R,
            lambda X: _scale_grad(grad(X), 1.0 / R),
            _one_hess,
        )
    if fid == "circle_expsin":
        return AmbientFunction(fid, _circle_expsin_value, _circle_expsin_grad, _circle_expsin_hess)
    if fid == "torus_mix":
        return AmbientFunction(fid, _torus_mix_value, _torus_mix_grad, _torus_mix_hess)
    raise KeyError(f"unknown function id {fid!r}")


def _scale_grad(g, c):
    return g * c
