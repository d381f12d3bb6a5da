"""Covariance kernels, Gram matrices, and the discretization-error sup norm.

Closed-form variants carry an integer code so their Gram fill and the
sup-error scan can run through the compiled core; the factorable and
custom variants always take the NumPy path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _backend, _core_np
from .timegrid import TimeGrid


class CovarianceKernel:
    """Known covariance function K(s, t) of the centered process.

    Subclasses implement ``__call__`` with NumPy broadcasting semantics and
    are symmetric in (s, t) by construction.
    """

    #: (kind code, param a, param b) when a compiled closed form exists.
    closed_form: Optional[tuple[int, float, float]] = None

    def __call__(self, s, t):
        raise NotImplementedError

    def name(self) -> str:
        return type(self).__name__


class Wiener(CovarianceKernel):
    """K(s, t) = min(s, t)."""

    closed_form = (0, 0.0, 0.0)

    def __call__(self, s, t):
        return np.minimum(s, t)


class BrownianBridge(CovarianceKernel):
    """K(s, t) = min(s, t) * (1 - max(s, t))."""

    closed_form = (1, 0.0, 0.0)

    def __call__(self, s, t):
        return np.minimum(s, t) * (1.0 - np.maximum(s, t))


class OrnsteinUhlenbeck(CovarianceKernel):
    """K(s, t) = sigma^2 / (2 eta) * (exp(-eta |s-t|) - exp(-eta (s+t))).

    The process started at zero, mean-reversion rate ``eta`` > 0 and
    diffusion scale ``sigma`` > 0.
    """

    def __init__(self, eta: float, sigma: float = 1.0):
        if eta <= 0:
            raise ValueError("eta must be positive")
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        self.eta = float(eta)
        self.sigma = float(sigma)
        self.closed_form = (2, self.eta, self.sigma)

    def __call__(self, s, t):
        c = self.sigma**2 / (2.0 * self.eta)
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        return c * (np.exp(-self.eta * np.abs(s - t)) - np.exp(-self.eta * (s + t)))

    def name(self) -> str:
        return f"OrnsteinUhlenbeck(eta={self.eta}, sigma={self.sigma})"


class FractionalBrownian(CovarianceKernel):
    """K(s, t) = |s|^{2H} + |t|^{2H} - |t-s|^{2H} with Hurst index 0 < H < 1."""

    def __init__(self, hurst: float):
        if not 0.0 < hurst < 1.0:
            raise ValueError("Hurst index must lie in (0, 1)")
        self.hurst = float(hurst)
        self.closed_form = (3, self.hurst, 0.0)

    def __call__(self, s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        h2 = 2.0 * self.hurst
        return np.abs(s) ** h2 + np.abs(t) ** h2 - np.abs(t - s) ** h2

    def name(self) -> str:
        return f"FractionalBrownian(H={self.hurst})"


class MarkovFactorable(CovarianceKernel):
    """K(s, t) = u(s) u(t) min(v(s), v(t)) with v non-decreasing."""

    def __init__(self, u: Callable, v: Callable):
        self.u = u
        self.v = v

    def __call__(self, s, t):
        return self.u(s) * self.u(t) * np.minimum(self.v(s), self.v(t))


class CustomKernel(CovarianceKernel):
    """Arbitrary symmetric kernel given as a broadcasting callable."""

    def __init__(self, k: Callable, label: str = "custom"):
        self.k = k
        self.label = label

    def __call__(self, s, t):
        return self.k(s, t)

    def name(self) -> str:
        return self.label


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Dense symmetric matrix K(t_i, t_j) over the grid nodes t_1..t_n."""

    values: np.ndarray
    grid: TimeGrid
    kernel_name: str = "kernel"

    @property
    def n(self) -> int:
        return self.values.shape[0]


def gram(kernel: CovarianceKernel, grid: TimeGrid) -> GramMatrix:
    """Gram matrix of the kernel on the grid nodes (t_0 excluded)."""
    nodes = np.ascontiguousarray(grid.nodes)
    core = _backend.compiled()
    if core is not None and kernel.closed_form is not None:
        kind, a, b = kernel.closed_form
        values = core.gram_closed(kind, a, b, nodes)
    else:
        values = _core_np.gram_from_callable(kernel, nodes)
    return GramMatrix(values=values, grid=grid, kernel_name=kernel.name())


def discretization_error_sup(
    kernel: CovarianceKernel, grid: TimeGrid, refinement: int
) -> float:
    """Estimate of sup |K^n - K| over the square of the grid interval.

    K^n(s, t) = K(ceil(s), ceil(t)) with ceil the right node of the cell;
    sampled on ``refinement`` midpoint offsets per cell.
    """
    if refinement < 2:
        raise ValueError("refinement must be >= 2")
    edges = np.ascontiguousarray(grid.t)
    core = _backend.compiled()
    if core is not None and kernel.closed_form is not None:
        kind, a, b = kernel.closed_form
        return float(core.sup_error_closed(kind, a, b, edges, refinement))
    return _core_np.sup_error_from_callable(kernel, edges, refinement)
