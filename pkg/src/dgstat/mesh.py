"""Periodic Cartesian grid and DG coefficient container."""

import math
from dataclasses import dataclass

import numpy as np

from dgstat.errors import ConfigurationError


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ConfigurationError(f"grid needs at least 2x2 cells, got {self.nx}x{self.ny}")
        if self.lx <= 0 or self.ly <= 0:
            raise ConfigurationError("domain lengths must be positive")

    @property
    def dx(self):
        return self.lx / self.nx

    @property
    def dy(self):
        return self.ly / self.ny

    def centers(self):
        return (np.arange(self.nx) + 0.5) * self.dx, (np.arange(self.ny) + 0.5) * self.dy


@dataclass
class DGField:
    """DOFs ``coeffs[i, j, alpha, beta, var]`` of a piecewise-Q^K field."""

    grid: Grid
    coeffs: np.ndarray

    @property
    def K(self):
        return self.coeffs.shape[2] - 1

    @property
    def m(self):
        return self.coeffs.shape[-1]

    def copy(self):
        return DGField(self.grid, self.coeffs.copy())

    def cell_means(self):
        # b_0 == 1, so the (0, 0) coefficient is the cell average
        return self.coeffs[:, :, 0, 0, :]

    def mean_sums(self):
        """Per-variable sum of cell means (exactly rounded, order independent)."""
        means = self.cell_means().reshape(-1, self.m)
        return np.array([math.fsum(means[:, v]) for v in range(self.m)])

    def is_finite(self):
        return bool(np.all(np.isfinite(self.coeffs)))
