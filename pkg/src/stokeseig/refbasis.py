"""Reference-triangle bases: vector elements for H(curl) and scalar P_k.

Vector bases are built as the dual of the classical edge/interior moment
functionals: span the local space with monomial-style generators, orthonormalize
them in L2 for conditioning, evaluate every functional on the generators and
invert.  The first-kind space of order k is P_k^2 plus the rotated
Raviart-Thomas homogeneous tail (-y, x) * homogeneous P_k; the second-kind
space of order m is the full P_m^2.

Edge functionals are tangential moments against Legendre polynomials on the
edge (parametrized from the first listed local vertex); interior functionals
are moments against P_{k-1}^2 (first kind) or the Raviart-Thomas space of
order m-2 (second kind).  These choices make the elements commute with the
element-wise L2 projection of the scalar curl.
"""

from __future__ import annotations

from functools import lru_cache
from math import factorial

import numpy as np
from numpy.polynomial import polynomial as npoly
from numpy.polynomial.legendre import legval
from scipy.signal import convolve2d
from scipy.special import roots_legendre

from .errors import ConfigurationError
from .quadrature import quadrature

NED1 = "ned1"
NED2 = "ned2"

# reference vertices (0,0), (1,0), (0,1); edge j joins vertices j, j+1 mod 3
_REF_VERTS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
_EDGE_VERTS = ((0, 1), (1, 2), (2, 0))

_GAUSS_N = 10


def _poly_zeros(deg):
    return np.zeros((deg + 1, deg + 1))


def _dx(c):
    out = np.zeros_like(c)
    if c.shape[0] > 1:
        out[:-1, :] = c[1:, :] * np.arange(1, c.shape[0])[:, None]
    return out


def _dy(c):
    out = np.zeros_like(c)
    if c.shape[1] > 1:
        out[:, :-1] = c[:, 1:] * np.arange(1, c.shape[1])[None, :]
    return out


def _monomial_exponents(order):
    return [(d - j, j) for d in range(order + 1) for j in range(d + 1)]


def _homogeneous_exponents(order):
    return [(order - j, j) for j in range(order + 1)]


def _integrate_poly(c):
    """Exact integral of a bivariate coefficient array over the reference triangle."""
    total = 0.0
    for i in range(c.shape[0]):
        for j in range(c.shape[1]):
            if c[i, j] != 0.0:
                total += c[i, j] * factorial(i) * factorial(j) / factorial(i + j + 2)
    return total


def _poly_dot_integral(a, b):
    """Exact integral of the dot product of two coefficient-array vectors."""
    out = 0.0
    for ca, cb in zip(a, b):
        out += _integrate_poly(convolve2d(ca, cb))
    return out


def _vector_generators(family, order):
    deg = order + 1 if family == NED1 else order
    gens = []
    for i, j in _monomial_exponents(order):
        for comp in range(2):
            c = [_poly_zeros(deg), _poly_zeros(deg)]
            c[comp][i, j] = 1.0
            gens.append(c)
    if family == NED1:
        # rotated Raviart-Thomas tail: (-y, x) times homogeneous monomials
        for i, j in _homogeneous_exponents(order):
            cx, cy = _poly_zeros(deg), _poly_zeros(deg)
            cx[i, j + 1] = -1.0
            cy[i + 1, j] = 1.0
            gens.append([cx, cy])
    return gens, deg


def _rt_generators(order):
    """Raviart-Thomas generators of the given order (internal dual family)."""
    deg = order + 1
    gens = []
    for i, j in _monomial_exponents(order):
        for comp in range(2):
            c = [_poly_zeros(deg), _poly_zeros(deg)]
            c[comp][i, j] = 1.0
            gens.append(c)
    for i, j in _homogeneous_exponents(order):
        cx, cy = _poly_zeros(deg), _poly_zeros(deg)
        cx[i + 1, j] = 1.0
        cy[i, j + 1] = 1.0
        gens.append([cx, cy])
    return gens


def _interior_moment_fields(family, order):
    if family == NED1:
        if order == 0:
            return []
        deg = order - 1
        fields = []
        for i, j in _monomial_exponents(deg):
            for comp in range(2):
                c = [_poly_zeros(deg), _poly_zeros(deg)]
                c[comp][i, j] = 1.0
                fields.append(c)
        return fields
    if order == 1:
        return []
    return _rt_generators(order - 2)


class _EdgeMoment:
    """Tangential moment on one local edge against a Legendre weight."""

    def __init__(self, edge, moment):
        self.edge = edge
        self.moment = moment
        a, b = (_REF_VERTS[v] for v in _EDGE_VERTS[edge])
        self.start = a
        self.direction = b - a
        s, w = roots_legendre(_GAUSS_N)
        self.params = (s + 1.0) / 2.0
        coeff = np.zeros(moment + 1)
        coeff[moment] = 1.0
        self.weights = w / 2.0 * legval(2.0 * self.params - 1.0, coeff)
        self.points = self.start[None, :] + np.outer(self.params, self.direction)

    def __call__(self, fn):
        vals = np.asarray(fn(self.points))
        return float(self.weights @ (vals @ self.direction))

    def apply_poly(self, comps):
        vals = np.stack([npoly.polyval2d(self.points[:, 0], self.points[:, 1], c)
                         for c in comps], axis=-1)
        return float(self.weights @ (vals @ self.direction))


class _InteriorMoment:
    """Moment against a fixed polynomial vector field over the triangle."""

    def __init__(self, index, field, quad_degree):
        self.index = index
        self.field = field
        rule = quadrature(quad_degree)
        self.points = rule.points
        q = np.stack([npoly.polyval2d(self.points[:, 0], self.points[:, 1], c)
                      for c in field], axis=-1)
        self.weighted = rule.weights[:, None] * q

    def __call__(self, fn):
        vals = np.asarray(fn(self.points))
        return float((vals * self.weighted).sum())

    def apply_poly(self, comps):
        # exact: convolve coefficients and use analytic monomial integrals
        return sum(_integrate_poly(convolve2d(c, f)) for c, f in zip(comps, self.field))


class ReferenceBasis:
    """Basis on the reference triangle, dual to its degree-of-freedom functionals.

    ``eval`` returns (dim, n, 2) for vector families and (dim, n) for scalars;
    ``eval_curl`` the scalar curl d1 v2 - d2 v1 of every vector basis function.
    """

    def __init__(self, family, order, coeffs, dofs, functionals=None):
        self.family = family
        self.order = order
        self.coeffs = coeffs
        self.dofs = dofs
        self.functionals = functionals
        self.vector = coeffs.ndim == 4
        self.dim = coeffs.shape[0]
        self.degree = coeffs.shape[-1] - 1
        if self.vector:
            self._curl = np.stack([_dx(c[1]) - _dy(c[0]) for c in coeffs])
            self._jac = np.stack([
                np.stack([np.stack([_dx(c[comp]), _dy(c[comp])]) for comp in range(2)])
                for c in coeffs])
        else:
            self._grad = np.stack([np.stack([_dx(c), _dy(c)]) for c in coeffs])

    @property
    def num_edge_dofs(self):
        return sum(1 for d in self.dofs if d[0] == "edge")

    def eval(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        x, y = points[:, 0], points[:, 1]
        if self.vector:
            return np.stack([
                np.stack([npoly.polyval2d(x, y, c[comp]) for comp in range(2)], axis=-1)
                for c in self.coeffs])
        return np.stack([npoly.polyval2d(x, y, c) for c in self.coeffs])

    def eval_curl(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        x, y = points[:, 0], points[:, 1]
        return np.stack([npoly.polyval2d(x, y, c) for c in self._curl])

    def eval_jacobian(self, points):
        """Jacobians d(component)/d(coordinate), shape (dim, n, 2, 2)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        x, y = points[:, 0], points[:, 1]
        if self.vector:
            out = np.empty((self.dim, len(points), 2, 2))
            for d in range(self.dim):
                for comp in range(2):
                    for der in range(2):
                        out[d, :, comp, der] = npoly.polyval2d(x, y, self._jac[d, comp, der])
            return out
        out = np.empty((self.dim, len(points), 2))
        for d in range(self.dim):
            for der in range(2):
                out[d, :, der] = npoly.polyval2d(x, y, self._grad[d, der])
        return out

    def dof_values(self, fn):
        """Apply every degree-of-freedom functional to a callable field."""
        return np.array([func(fn) for func in self.functionals])


def _build_functionals(family, order, deg):
    n_edge = order + 1
    dofs = [("edge", e, m) for e in range(3) for m in range(n_edge)]
    functionals = [_EdgeMoment(e, m) for e in range(3) for m in range(n_edge)]
    fields = _interior_moment_fields(family, order)
    qdeg = 2 * deg + 2
    for i, field in enumerate(fields):
        dofs.append(("interior", i))
        functionals.append(_InteriorMoment(i, field, qdeg))
    return dofs, functionals


@lru_cache(maxsize=None)
def ned_basis(family, order):
    """Vector basis of the requested family and order.

    Supported: first kind orders 0..2, second kind orders 1..3.
    """
    if family == NED1:
        if order not in (0, 1, 2):
            raise ConfigurationError(f"first-kind order must be 0, 1 or 2, got {order}")
    elif family == NED2:
        if order not in (1, 2, 3):
            raise ConfigurationError(f"second-kind order must be 1, 2 or 3, got {order}")
    else:
        raise ConfigurationError(f"unknown vector family {family!r}")

    gens, deg = _vector_generators(family, order)
    dofs, functionals = _build_functionals(family, order, deg)
    if len(dofs) != len(gens):
        raise ConfigurationError(
            f"{family} order {order}: {len(gens)} generators vs {len(dofs)} functionals")

    # L2-orthonormalize the generators so the moment matrix is well conditioned
    m = len(gens)
    gram = np.empty((m, m))
    for a in range(m):
        for b in range(a + 1):
            gram[a, b] = gram[b, a] = _poly_dot_integral(gens[a], gens[b])
    chol = np.linalg.cholesky(gram)
    inv_chol = np.linalg.inv(chol)
    gen_arr = np.array([[g[0], g[1]] for g in gens])
    ortho = np.einsum("am,mcij->acij", inv_chol, gen_arr)

    vand = np.array([[func.apply_poly(g) for g in ortho] for func in functionals])
    coeffs = np.einsum("am,mcij->acij", np.linalg.inv(vand).T, ortho)
    # one refinement pass keeps duality at machine precision
    vand2 = np.array([[func.apply_poly(c) for c in coeffs] for func in functionals])
    coeffs = np.einsum("am,mcij->acij", np.linalg.inv(vand2).T, coeffs)
    return ReferenceBasis(family, order, coeffs, dofs, functionals)


@lru_cache(maxsize=None)
def pk_basis(order):
    """Monomial basis of P_order on the reference triangle (constant first)."""
    if order not in (0, 1, 2, 3):
        raise ConfigurationError(f"piecewise polynomial order must be 0..3, got {order}")
    exps = _monomial_exponents(order)
    coeffs = np.zeros((len(exps), order + 1, order + 1))
    for d, (i, j) in enumerate(exps):
        coeffs[d, i, j] = 1.0
    dofs = [("interior", i) for i in range(len(exps))]
    return ReferenceBasis("pk", order, coeffs, dofs)


@lru_cache(maxsize=None)
def pk_reference_mass(order):
    """Exact Gram matrix of :func:`pk_basis` on the reference triangle."""
    exps = _monomial_exponents(order)
    n = len(exps)
    out = np.empty((n, n))
    for a, (i, j) in enumerate(exps):
        for b, (k, l) in enumerate(exps):
            out[a, b] = factorial(i + k) * factorial(j + l) / factorial(i + k + j + l + 2)
    return out
