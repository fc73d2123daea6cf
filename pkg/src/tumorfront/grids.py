"""One-dimensional grids and difference stencils for the wave solver.

Grids are either uniform or symmetrically stretched by a sinh map that
clusters nodes around the interface at xi = 0 while keeping the far field
coarse; the stretched variant makes very small epsilon tractable. All
stencils are 3-point and exact on quadratics, in conservative form for the
variable-coefficient diffusion.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Grid1D"]


@dataclass(frozen=True)
class Grid1D:
    """Strictly increasing nodes xi[0..n-1] plus precomputed stencil weights."""

    xi: np.ndarray
    kind: str = "uniform"
    # interior stencil weights, index i-1 corresponds to node i (i = 1..n-2)
    d1: tuple[np.ndarray, np.ndarray, np.ndarray] = field(repr=False, default=None)
    d2: tuple[np.ndarray, np.ndarray, np.ndarray] = field(repr=False, default=None)
    h_minus: np.ndarray = field(repr=False, default=None)
    h_plus: np.ndarray = field(repr=False, default=None)
    h_bar: np.ndarray = field(repr=False, default=None)

    @property
    def n(self) -> int:
        return self.xi.size

    @staticmethod
    def _with_stencils(xi: np.ndarray, kind: str) -> "Grid1D":
        if xi.size < 5:
            raise ValueError(f"grid needs at least 5 nodes, got {xi.size}")
        h = np.diff(xi)
        if np.any(h <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        hm = h[:-1]   # xi_i - xi_{i-1} for interior i
        hp = h[1:]    # xi_{i+1} - xi_i
        hs = hm + hp
        # first derivative, exact on quadratics
        d1 = (-hp / (hm * hs), (hp - hm) / (hm * hp), hm / (hp * hs))
        # second derivative, exact on quadratics
        d2 = (2.0 / (hm * hs), -2.0 / (hm * hp), 2.0 / (hp * hs))
        return Grid1D(xi=xi, kind=kind, d1=d1, d2=d2, h_minus=hm, h_plus=hp,
                      h_bar=0.5 * hs)

    @staticmethod
    def uniform(xi_half: float, n: int) -> "Grid1D":
        """Symmetric uniform grid on [-xi_half, xi_half]."""
        return Grid1D._with_stencils(np.linspace(-xi_half, xi_half, n), "uniform")

    @staticmethod
    def stretched(xi_half: float, n: int, beta: float) -> "Grid1D":
        """sinh-stretched grid: node density ~cosh(beta) times higher at 0."""
        if beta <= 0:
            raise ValueError(f"stretch parameter must be positive, got {beta}")
        s = np.linspace(-1.0, 1.0, n)
        xi = xi_half * np.sinh(beta * s) / np.sinh(beta)
        return Grid1D._with_stencils(xi, "stretched")

    def nearest(self, xi0: float) -> int:
        return int(np.argmin(np.abs(self.xi - xi0)))

    def first_derivative(self, f: np.ndarray) -> np.ndarray:
        """Interior first derivative (length n-2)."""
        a, b, c = self.d1
        return a * f[:-2] + b * f[1:-1] + c * f[2:]

    def second_derivative(self, f: np.ndarray) -> np.ndarray:
        """Interior second derivative (length n-2)."""
        a, b, c = self.d2
        return a * f[:-2] + b * f[1:-1] + c * f[2:]

    def flux_divergence(self, coeff: np.ndarray, f: np.ndarray) -> np.ndarray:
        """Interior divergence of coeff * grad f in conservative form.

        Face coefficients are arithmetic means of the nodal values.
        """
        c_face = 0.5 * (coeff[:-1] + coeff[1:])
        flux = c_face * np.diff(f) / np.diff(self.xi)
        return np.diff(flux) / self.h_bar
