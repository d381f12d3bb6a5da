"""Partitions of the observation interval and per-cell Gauss-Legendre quadrature.

A grid ``t_0 < t_1 < ... < t_n`` partitions ``[t_0, t_n]`` into cells
``T_1 = [t_0, t_1]`` and ``T_j = (t_{j-1}, t_j]`` for ``j >= 2`` (the first
cell is closed on both ends, later cells are left-open).  Cell indices are
1-based throughout, matching that convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Ordered partition endpoints ``t_0 < t_1 < ... < t_n``."""

    t: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        object.__setattr__(self, "t", t)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("grid needs at least two endpoints")
        if not np.all(np.isfinite(t)):
            raise ValueError("grid endpoints must be finite")
        if np.any(np.diff(t) <= 0):
            raise ValueError("grid endpoints must be strictly increasing")

    @property
    def n(self) -> int:
        """Number of cells (= number of observation nodes)."""
        return self.t.size - 1

    @property
    def left(self) -> float:
        return float(self.t[0])

    @property
    def right(self) -> float:
        return float(self.t[-1])

    @property
    def nodes(self) -> np.ndarray:
        """Observation nodes ``t_1, ..., t_n`` (``t_0`` is excluded)."""
        return self.t[1:]

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.t)

    @property
    def mesh(self) -> float:
        """Largest cell width ``max_i (t_i - t_{i-1})``."""
        return float(self.widths.max())

    def cell_index(self, s):
        """1-based index of the cell containing ``s``.

        Returns the smallest ``j`` with ``t_j >= s``; ``s = t_0`` maps to
        cell 1 because the first cell is closed on the left.  Accepts a
        scalar or an array.
        """
        s_arr = np.asarray(s, dtype=float)
        if np.any(s_arr < self.t[0]) or np.any(s_arr > self.t[-1]):
            raise ValueError(
                f"point outside the grid interval [{self.left}, {self.right}]"
            )
        idx = np.searchsorted(self.t, s_arr, side="left")
        idx = np.maximum(idx, 1)
        return int(idx) if np.isscalar(s) or s_arr.ndim == 0 else idx

    def same_nodes(self, other: "TimeGrid") -> bool:
        return self.t.shape == other.t.shape and bool(np.array_equal(self.t, other.t))


def uniform_grid(n: int, t_left: float = 0.0, t_right: float = 1.0) -> TimeGrid:
    """Uniform grid with ``n`` cells on ``[t_left, t_right]``."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    if not t_left < t_right:
        raise ValueError("interval must satisfy t_left < t_right")
    return TimeGrid(np.linspace(t_left, t_right, n + 1))


def cell_index(grid: TimeGrid, s: float) -> int:
    return grid.cell_index(s)


@dataclass(frozen=True)
class CellQuadrature:
    """Fixed-order Gauss-Legendre rule, mapped per cell on demand.

    Exact on polynomials of degree <= 2*order - 1 within each cell; the
    mapped weights of a cell sum to the cell length.
    """

    order: int = 8
    _ref_nodes: np.ndarray = field(init=False, repr=False)
    _ref_weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("quadrature order must be >= 1")
        x, w = np.polynomial.legendre.leggauss(self.order)
        object.__setattr__(self, "_ref_nodes", x)
        object.__setattr__(self, "_ref_weights", w)

    def mapped(self, grid: TimeGrid) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights on every cell, each of shape ``(n, order)``."""
        a = grid.t[:-1, None]
        b = grid.t[1:, None]
        nodes = 0.5 * (a + b) + 0.5 * (b - a) * self._ref_nodes[None, :]
        weights = 0.5 * (b - a) * self._ref_weights[None, :]
        return nodes, weights

    def mapped_interval(self, a: float, b: float, cells: int) -> tuple[np.ndarray, np.ndarray]:
        """Composite rule on ``[a, b]`` split into ``cells`` equal cells, flattened."""
        nodes, weights = self.mapped(uniform_grid(cells, a, b))
        return nodes.ravel(), weights.ravel()


def integrate_cell(q: CellQuadrature, grid: TimeGrid, i: int, f: Callable) -> float:
    """Gauss-Legendre approximation of the integral of ``f`` over cell ``i`` (1-based)."""
    if not 1 <= i <= grid.n:
        raise ValueError(f"cell index {i} outside 1..{grid.n}")
    nodes, weights = q.mapped(grid)
    return float(np.dot(weights[i - 1], f(nodes[i - 1])))


def integrate(q: CellQuadrature, grid: TimeGrid, f: Callable) -> float:
    """Composite integral of ``f`` over the whole grid interval."""
    nodes, weights = q.mapped(grid)
    return float(np.sum(weights * f(nodes)))
