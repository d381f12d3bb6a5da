"""Exact simulation of the discrete observation h(t_i) + eps * Z(t_i).

The centered process is drawn by a dense lower-triangular factorization of
the Gram matrix; every replication owns a counter-based Philox stream keyed
by (master seed, replication index), so simulation is reproducible for any
worker count and execution order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NotPositiveSemidefiniteError
from .kernels import CovarianceKernel, GramMatrix, gram
from .mean_models import DEFAULT_REFINEMENT, MeanModel, mean_vector
from .timegrid import CellQuadrature, TimeGrid


@dataclass(frozen=True)
class SeedSpec:
    """Derives one independent noise stream per (master_seed, replication)."""

    master_seed: int
    replication_index: int = 0

    def __post_init__(self):
        if self.replication_index < 0:
            raise ValueError("replication_index must be nonnegative")

    def generator(self) -> np.random.Generator:
        key = np.array(
            [_splitmix64(self.master_seed), _splitmix64(self.replication_index ^ _GOLDEN)],
            dtype=np.uint64,
        )
        return np.random.Generator(np.random.Philox(key=key))


_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return x ^ (x >> 31)


@dataclass(frozen=True, eq=False)
class Observation:
    """Discrete sample (X_{t_1}, ..., X_{t_n}) with its noise scale."""

    grid: TimeGrid
    values: np.ndarray
    epsilon: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != (self.grid.n,):
            raise ValueError("values length must equal the number of grid nodes")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,x\n")
            for t, x in zip(self.grid.nodes, self.values):
                fh.write(f"{t:.17g},{x:.17g}\n")

    @classmethod
    def from_csv(cls, path, epsilon: float, t_left: float = 0.0) -> "Observation":
        """CSV stores nodes t_1..t_n only; ``t_left`` supplies t_0."""
        data = np.atleast_2d(np.genfromtxt(path, delimiter=",", skip_header=1))
        grid = TimeGrid(np.concatenate([[t_left], data[:, 0]]))
        return cls(grid=grid, values=data[:, 1], epsilon=epsilon)

    def to_json(self, path) -> None:
        payload = {
            "grid": {"n": self.grid.n, "t": [float(v) for v in self.grid.t]},
            "values": [float(v) for v in self.values],
            "epsilon": self.epsilon,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)

    @classmethod
    def from_json(cls, path) -> "Observation":
        with open(path) as fh:
            payload = json.load(fh)
        return cls(
            grid=TimeGrid(np.asarray(payload["grid"]["t"], dtype=float)),
            values=np.asarray(payload["values"], dtype=float),
            epsilon=float(payload["epsilon"]),
        )


def chol_factor(g: GramMatrix | np.ndarray, jitter_rel: float = 1e-12) -> np.ndarray:
    """Lower-triangular L with L L^T = G + jitter * I.

    Starts at jitter = jitter_rel * max(max diag G, 1) and escalates by
    x10 up to 4 retries; zero jitter is attempted literally first when
    jitter_rel == 0.
    """
    if isinstance(g, GramMatrix):
        mat = g.values
        label = f"{g.kernel_name} Gram on n={g.n} grid"
    else:
        mat = np.asarray(g, dtype=float)
        label = f"matrix of order {mat.shape[0]}"
    if jitter_rel < 0:
        raise ValueError("jitter_rel must be nonnegative")
    scale = max(float(np.max(np.diag(mat))), 1.0)
    jitter = jitter_rel * scale
    eye = np.eye(mat.shape[0])
    for attempt in range(5):
        try:
            return np.linalg.cholesky(mat + jitter * eye)
        except np.linalg.LinAlgError:
            jitter = 10.0 * jitter if jitter > 0 else 1e-14 * scale
    raise NotPositiveSemidefiniteError(
        f"Cholesky failed for {label} after jitter escalation to {jitter:.3e}"
    )


def sample_observation(
    model: MeanModel,
    theta0,
    kernel: CovarianceKernel,
    grid: TimeGrid,
    epsilon: float,
    seed: SeedSpec,
    q: Optional[CellQuadrature] = None,
    refinement: int = DEFAULT_REFINEMENT,
    chol: Optional[np.ndarray] = None,
    mean: Optional[np.ndarray] = None,
) -> Observation:
    """One exact draw of the observation vector.

    ``chol`` and ``mean`` allow reuse of the per-(kernel, grid) factor and
    the mean vector across replications; both are recomputed when absent.
    epsilon = 0 returns the noiseless mean vector.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if mean is None:
        mean = mean_vector(
            model, theta0, kernel, grid.nodes, q, refinement,
            interval=(grid.left, grid.right),
        )
    if epsilon == 0.0:
        return Observation(grid=grid, values=mean.copy(), epsilon=0.0)
    if chol is None:
        chol = chol_factor(gram(kernel, grid))
    g = seed.generator().standard_normal(grid.n)
    return Observation(grid=grid, values=mean + epsilon * (chol @ g), epsilon=epsilon)
