"""Numerical integration on the reference triangle and its edges.

The reference triangle is ``{(x, y) : x >= 0, y >= 0, x + y <= 1}`` with
vertices (0,0), (1,0), (0,1).  Rules are fully symmetric (invariant under all
six vertex permutations), carry positive weights only, and come paired with a
Gauss rule on [0, 1] of the same polynomial exactness for edge integrals.
"""

from __future__ import annotations

from functools import lru_cache
from math import factorial

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import ConfigurationError

MAX_DEGREE = 10

_PERMS = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]


class QuadratureRule:
    """Symmetric positive rule on the reference triangle.

    Attributes
    ----------
    degree : int
        Total polynomial degree integrated exactly.
    bary : (n, 3) array
        Barycentric coordinates; the cartesian point is ``(b1, b2)``.
    weights : (n,) array
        Positive weights summing to the reference area 1/2.
    edge_points, edge_weights : (m,) arrays
        Companion Gauss rule on [0, 1], weights summing to 1.
    """

    def __init__(self, degree, bary, weights, edge_points, edge_weights):
        self.degree = int(degree)
        self.bary = np.asarray(bary, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.edge_points = np.asarray(edge_points, dtype=float)
        self.edge_weights = np.asarray(edge_weights, dtype=float)
        for arr in (self.bary, self.weights, self.edge_points, self.edge_weights):
            arr.flags.writeable = False

    @property
    def points(self):
        """Cartesian quadrature points, shape (n, 2)."""
        return self.bary[:, 1:]

    def __len__(self):
        return self.weights.size


def reference_monomial_integral(i, j):
    """Exact value of ``int x^i y^j`` over the reference triangle."""
    return factorial(i) * factorial(j) / factorial(i + j + 2)


def _gauss01(n):
    x, w = roots_legendre(n)
    return (x + 1.0) / 2.0, w / 2.0


def _conical_rule(degree):
    # Gauss-Legendre in the collapsed coordinate, Gauss-Jacobi (weight 1-y)
    # in the other; exact for total degree 2n-1 per direction.
    n = (degree + 2) // 2
    s, ws = _gauss01(n)
    t, wt = roots_jacobi(n, 1.0, 0.0)
    y = (t + 1.0) / 2.0
    wy = wt / 4.0
    xx = np.outer(1.0 - y, s).ravel()
    yy = np.repeat(y, n)
    ww = np.outer(wy, ws).ravel()
    return np.column_stack([xx, yy]), ww


def _symmetrize(points, weights):
    b = np.column_stack([1.0 - points[:, 0] - points[:, 1], points[:, 0], points[:, 1]])
    bary = np.vstack([b[:, perm] for perm in _PERMS])
    w = np.tile(weights / 6.0, len(_PERMS))
    return bary, w


@lru_cache(maxsize=None)
def quadrature(degree):
    """Return a :class:`QuadratureRule` exact to the given total degree."""
    if not isinstance(degree, (int, np.integer)) or degree < 1:
        raise ConfigurationError(f"quadrature degree must be a positive integer, got {degree!r}")
    if degree > MAX_DEGREE:
        raise ConfigurationError(f"quadrature degree {degree} exceeds the supported maximum {MAX_DEGREE}")

    if degree == 1:
        bary = np.array([[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]])
        weights = np.array([0.5])
    elif degree == 2:
        bary = np.array([
            [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
            [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
            [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
        ])
        weights = np.full(3, 1.0 / 6.0)
    else:
        pts, w = _conical_rule(degree)
        bary, weights = _symmetrize(pts, w)

    ep, ew = _gauss01((degree + 2) // 2)
    return QuadratureRule(degree, bary, weights, ep, ew)
