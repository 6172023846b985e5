"""Orthonormal Legendre basis on [-1/2, 1/2], Gauss quadrature, L2 projection.

The basis is ``b_k(xi) = sqrt(2k+1) P_k(2 xi)``, i.e.
``1, 2 sqrt(3) xi, sqrt(5)/2 (12 xi^2 - 1), sqrt(7) xi (20 xi^2 - 3), ...``,
so the mass matrix is the identity.
"""

from dataclasses import dataclass, field
from math import sqrt

import numpy as np
from numpy.polynomial import legendre as npleg

from dgstat.errors import ConfigurationError
from dgstat.mesh import DGField, Grid

MAX_DEGREE = 6


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes and weights on [-1/2, 1/2] (weights sum to 1)."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def npoints(self):
        return len(self.nodes)

    def integrate(self, f, a=-0.5, b=0.5):
        x = 0.5 * (a + b) + (b - a) * self.nodes
        return (b - a) * np.sum(self.weights * np.asarray(f(x)))


def gauss_legendre(npoints):
    x, w = npleg.leggauss(npoints)
    return QuadratureRule(nodes=0.5 * x, weights=0.5 * w)


GAUSS5 = gauss_legendre(5)


def gauss5(f, a, b):
    """5-point Gauss approximation of the integral of ``f`` over [a, b]."""
    return GAUSS5.integrate(f, a, b)


def _coeffs(k):
    c = np.zeros(k + 1)
    c[k] = 1.0
    return c


@dataclass(frozen=True)
class BasisSet:
    """Degree-K orthonormal basis with its DG matrices.

    ``stiffness[k, a]`` is the integral of ``b_k' b_a`` over the reference
    interval; ``right[k]``/``left[k]`` are the traces ``b_k(+-1/2)``.
    """

    K: int
    mass: np.ndarray = field(repr=False)
    stiffness: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)
    left: np.ndarray = field(repr=False)

    @property
    def size(self):
        return self.K + 1

    def values(self, xi):
        """Array of shape ``xi.shape + (K+1,)`` with ``b_k(xi)``."""
        xi = np.asarray(xi, dtype=float)
        out = np.empty(xi.shape + (self.size,))
        for k in range(self.size):
            out[..., k] = sqrt(2 * k + 1) * npleg.legval(2.0 * xi, _coeffs(k))
        return out

    def derivatives(self, xi):
        xi = np.asarray(xi, dtype=float)
        out = np.empty(xi.shape + (self.size,))
        for k in range(self.size):
            out[..., k] = 2.0 * sqrt(2 * k + 1) * npleg.legval(2.0 * xi, npleg.legder(_coeffs(k)))
        return out


def stiffness_entry(k, a):
    """Closed form of the integral of b_k' b_a: nonzero only for a < k, k - a odd."""
    if a < k and (k - a) % 2 == 1:
        return 2.0 * sqrt((2 * k + 1) * (2 * a + 1))
    return 0.0


def legendre_basis(K):
    if not isinstance(K, (int, np.integer)) or K < 0 or K > MAX_DEGREE:
        raise ConfigurationError(f"polynomial degree K must be an integer in [0, {MAX_DEGREE}], got {K!r}")
    K = int(K)
    n = K + 1
    stiffness = np.array([[stiffness_entry(k, a) for a in range(n)] for k in range(n)])
    right = np.array([sqrt(2 * k + 1) for k in range(n)])
    left = np.array([(-1) ** k * sqrt(2 * k + 1) for k in range(n)])
    return BasisSet(K=K, mass=np.eye(n), stiffness=stiffness, right=right, left=left)


def cell_nodes(grid, rule=GAUSS5):
    """Physical quadrature coordinates, shapes ``(Nx, 1, g, 1)`` and ``(1, Ny, 1, g)``."""
    xc, yc = grid.centers()
    x = xc[:, None, None, None] + grid.dx * rule.nodes[None, None, :, None]
    y = yc[None, :, None, None] + grid.dy * rule.nodes[None, None, None, :]
    return x, y


def project_to_dg(q0, grid, basis, rule=GAUSS5):
    """L2 projection of ``q0(x, y) -> (..., m)`` onto piecewise Q^K, tensor quadrature per cell."""
    x, y = cell_nodes(grid, rule)
    x, y = np.broadcast_arrays(x, y)
    vals = np.asarray(q0(x, y), dtype=float)
    phi = basis.values(rule.nodes)
    wphi = rule.weights[:, None] * phi
    coeffs = np.einsum("ga,hb,ijghm->ijabm", wphi, wphi, vals)
    return DGField(grid=grid, coeffs=coeffs)


def evaluate(field, basis, xi, eta):
    """Values of every cell's polynomial at reference points ``xi`` x ``eta``.

    Returns shape ``(Nx, Ny, len(xi), len(eta), m)``.
    """
    px = basis.values(np.atleast_1d(xi))
    py = basis.values(np.atleast_1d(eta))
    return np.einsum("ga,hb,ijabm->ijghm", px, py, field.coeffs)


def cell_center_values(field, basis):
    return evaluate(field, basis, [0.0], [0.0])[:, :, 0, 0, :]


def quadrature_values(field, basis, rule=GAUSS5):
    """Point values at the tensor quadrature nodes of every cell, ``(Nx, Ny, g, g, m)``."""
    phi = basis.values(rule.nodes)
    tmp = np.einsum("ga,ijabm->ijgbm", phi, field.coeffs)
    return np.einsum("hb,ijgbm->ijghm", phi, tmp)


def l2_norm_nodal(values, grid, rule=GAUSS5):
    """Per-variable L2 norm of nodal data shaped like :func:`quadrature_values` output."""
    w2 = np.outer(rule.weights, rule.weights)[None, None, :, :, None] * (grid.dx * grid.dy)
    return np.sqrt(np.sum(w2 * np.abs(values) ** 2, axis=(0, 1, 2, 3)))
