"""Parametric families of finite signed measures and their induced means.

Three variants parameterize the measure mu_theta on the interval:

* ``DiracBasis`` -- mu_theta = sum_k theta_k * delta_{s_k} (point masses),
* ``LinearDensity`` -- mu_theta(ds) = (sum_k theta_k f_k(s)) ds,
* ``NonlinearDensity`` -- mu_theta(ds) = f(theta, s) ds with user-supplied
  theta-derivative callbacks.

The induced mean function is h_theta(t) = integral of K(s, t) mu_theta(ds),
and the information matrix has entries <d_i mu, K d_j mu>.  Continuous
quadrature splits every integral against K at the kernel's diagonal, where
all supported kernels lose smoothness.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import UnsupportedModelError
from .kernels import CovarianceKernel, GramMatrix
from .timegrid import CellQuadrature, TimeGrid, uniform_grid

DEFAULT_REFINEMENT = 64


@dataclass(frozen=True, eq=False)
class ParamBox:
    """Axis-aligned box parameter set with nonempty interior."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower/upper must be 1-d arrays of equal length")
        if np.any(lo >= hi):
            raise ValueError("box must satisfy lower < upper componentwise")

    @property
    def p(self) -> int:
        return self.lower.size

    def contains(self, theta, atol: float = 0.0) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(
            np.all(theta >= self.lower - atol) and np.all(theta <= self.upper + atol)
        )

    def clip(self, theta) -> np.ndarray:
        return np.clip(np.asarray(theta, dtype=float), self.lower, self.upper)

    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def corners(self, max_dims: int = 4) -> list[np.ndarray]:
        """Up to 2^min(p, max_dims) corners; extra dimensions sit at the center."""
        k = min(self.p, max_dims)
        base = self.center()
        out = []
        for bits in itertools.product((0, 1), repeat=k):
            c = base.copy()
            for j, bit in enumerate(bits):
                c[j] = self.upper[j] if bit else self.lower[j]
            out.append(c)
        return out


def _check_theta(box: ParamBox, theta) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (box.p,):
        raise ValueError(f"theta must have shape ({box.p},)")
    if not box.contains(theta, atol=1e-12):
        raise ValueError("theta lies outside the parameter box")
    return theta


class MeanModel:
    """Base class; concrete variants implement densities or point masses."""

    box: ParamBox

    @property
    def p(self) -> int:
        return self.box.p

    @property
    def is_linear(self) -> bool:
        return False

    @property
    def has_derivatives(self) -> bool:
        return True


class DiracBasis(MeanModel):
    """mu_theta = sum_k theta_k * delta_{s_k} with strictly increasing sites."""

    def __init__(self, sites: Sequence[float], box: ParamBox):
        sites = np.asarray(sites, dtype=float)
        if sites.ndim != 1 or sites.size == 0:
            raise ValueError("need at least one site")
        if np.any(np.diff(sites) <= 0):
            raise ValueError("sites must be strictly increasing")
        if sites.size != box.p:
            raise ValueError("number of sites must match the box dimension")
        self.sites = sites
        self.box = box

    @property
    def is_linear(self) -> bool:
        return True


class LinearDensity(MeanModel):
    """mu_theta(ds) = sum_k theta_k f_k(s) ds with continuous basis densities."""

    def __init__(self, basis: Sequence[Callable], box: ParamBox):
        if len(basis) != box.p:
            raise ValueError("number of basis densities must match the box dimension")
        self.basis = list(basis)
        self.box = box

    @property
    def is_linear(self) -> bool:
        return True

    def density(self, theta, s):
        theta = np.asarray(theta, dtype=float)
        out = theta[0] * np.asarray(self.basis[0](s), dtype=float)
        for k in range(1, len(self.basis)):
            out = out + theta[k] * self.basis[k](s)
        return out


class NonlinearDensity(MeanModel):
    """mu_theta(ds) = f(theta, s) ds with derivative callbacks.

    ``grad(theta, s)`` returns shape (p,) + s.shape, ``hess(theta, s)``
    (p, p) + s.shape, ``third`` likewise one order higher (optional, only
    needed for criteria-grade experiments).  Missing callbacks either
    raise (default) or fall back to central differences when
    ``fd_fallback=True``; the fallback is flagged on the instance.
    """

    def __init__(
        self,
        f: Callable,
        grad: Optional[Callable] = None,
        hess: Optional[Callable] = None,
        third: Optional[Callable] = None,
        *,
        box: ParamBox,
        fd_fallback: bool = False,
        fd_step: float = 1e-6,
    ):
        self.f = f
        self._grad = grad
        self._hess = hess
        self.third = third
        self.box = box
        self.fd_fallback = fd_fallback
        self.fd_step = fd_step
        self.uses_fd_derivatives = fd_fallback and (grad is None or hess is None)

    @property
    def has_derivatives(self) -> bool:
        return (self._grad is not None and self._hess is not None) or self.fd_fallback

    def density(self, theta, s):
        return np.asarray(self.f(np.asarray(theta, dtype=float), s), dtype=float)

    def grad_density(self, theta, s):
        theta = np.asarray(theta, dtype=float)
        if self._grad is not None:
            return np.asarray(self._grad(theta, s), dtype=float)
        if not self.fd_fallback:
            raise UnsupportedModelError("model has no gradient callback")
        h = self.fd_step
        rows = []
        for j in range(self.p):
            e = np.zeros(self.p)
            e[j] = h
            rows.append((self.f(theta + e, s) - self.f(theta - e, s)) / (2 * h))
        return np.asarray(rows, dtype=float)

    def hess_density(self, theta, s):
        theta = np.asarray(theta, dtype=float)
        if self._hess is not None:
            return np.asarray(self._hess(theta, s), dtype=float)
        if not self.fd_fallback:
            raise UnsupportedModelError("model has no Hessian callback")
        h = self.fd_step
        out = []
        for i in range(self.p):
            e = np.zeros(self.p)
            e[i] = h
            out.append(
                (self.grad_density(theta + e, s) - self.grad_density(theta - e, s))
                / (2 * h)
            )
        return np.asarray(out, dtype=float)


# ---------------------------------------------------------------------------
# Discretized quantities: cell masses and their theta-derivatives
# ---------------------------------------------------------------------------


def cell_masses(
    model: MeanModel, theta, grid: TimeGrid, q: CellQuadrature
) -> np.ndarray:
    """Vector mu_theta(T_i), i = 1..n."""
    theta = _check_theta(model.box, theta)
    if isinstance(model, DiracBasis):
        masses = np.zeros(grid.n)
        for site, th in zip(model.sites, theta):
            masses[grid.cell_index(site) - 1] += th
        return masses
    nodes, weights = q.mapped(grid)
    dens = model.density(theta, nodes)
    return np.einsum("ij,ij->i", weights, dens)


def cell_mass_jacobian(
    model: MeanModel, theta, grid: TimeGrid, q: CellQuadrature
) -> np.ndarray:
    """Matrix with column j = cell masses of d_j mu_theta, shape (n, p)."""
    theta = _check_theta(model.box, theta)
    if isinstance(model, DiracBasis):
        jac = np.zeros((grid.n, model.p))
        for k, site in enumerate(model.sites):
            jac[grid.cell_index(site) - 1, k] += 1.0
        return jac
    nodes, weights = q.mapped(grid)
    if isinstance(model, LinearDensity):
        cols = [np.einsum("ij,ij->i", weights, np.broadcast_to(
            np.asarray(fk(nodes), dtype=float), nodes.shape)) for fk in model.basis]
        return np.stack(cols, axis=1)
    grads = model.grad_density(theta, nodes)  # (p, n, order)
    return np.einsum("ij,kij->ik", weights, grads)


def cell_mass_hessian(
    model: MeanModel, theta, grid: TimeGrid, q: CellQuadrature
) -> np.ndarray:
    """Tensor with entry [i, j] = cell masses of d_ij mu_theta, shape (p, p, n)."""
    theta = _check_theta(model.box, theta)
    if isinstance(model, (DiracBasis, LinearDensity)):
        return np.zeros((model.p, model.p, grid.n))
    nodes, weights = q.mapped(grid)
    hess = model.hess_density(theta, nodes)  # (p, p, n, order)
    return np.einsum("ij,klij->kli", weights, hess)


# ---------------------------------------------------------------------------
# Continuous quantities: induced mean, bilinear forms, information matrix
# ---------------------------------------------------------------------------


def _unit_composite(q: CellQuadrature, cells: int) -> tuple[np.ndarray, np.ndarray]:
    return q.mapped_interval(0.0, 1.0, cells)


def _kernel_density_integral(
    kernel: CovarianceKernel,
    dens: Callable,
    targets: np.ndarray,
    left: float,
    right: float,
    q: CellQuadrature,
    cells: int,
) -> np.ndarray:
    """g(x) = int_left^right K(s, x) dens(s) ds for each target x.

    The integral is split at s = x so each half is smooth for all the
    supported kernels (they are non-smooth only across the diagonal).
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    u, w = _unit_composite(q, cells)
    out = np.zeros(targets.shape)
    for a, b in ((left, None), (None, right)):
        lo = np.full_like(targets, a) if a is not None else targets
        hi = np.full_like(targets, b) if b is not None else targets
        span = (hi - lo)[:, None]
        nodes = lo[:, None] + span * u[None, :]
        weights = span * w[None, :]
        out += np.einsum(
            "ij,ij->i", weights, kernel(nodes, targets[:, None]) * dens(nodes)
        )
    return out


def mean_vector(
    model: MeanModel,
    theta,
    kernel: CovarianceKernel,
    targets,
    q: Optional[CellQuadrature] = None,
    refinement: int = DEFAULT_REFINEMENT,
    interval: tuple[float, float] = (0.0, 1.0),
) -> np.ndarray:
    """h_theta evaluated at an array of targets.

    ``interval`` is the support of the parameter measure (the observation
    window), which the density is integrated over.
    """
    theta = _check_theta(model.box, theta)
    q = q or CellQuadrature()
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    if isinstance(model, DiracBasis):
        return np.asarray(
            kernel(model.sites[None, :], targets[:, None]) @ theta, dtype=float
        )
    return _kernel_density_integral(
        kernel, lambda s: model.density(theta, s), targets, interval[0], interval[1], q, refinement
    )


def mean_function(
    model: MeanModel,
    theta,
    kernel: CovarianceKernel,
    t: float,
    q: Optional[CellQuadrature] = None,
    refinement: int = DEFAULT_REFINEMENT,
    interval: tuple[float, float] = (0.0, 1.0),
) -> float:
    """h_theta(t) = (K mu_theta)(t)."""
    return float(mean_vector(model, theta, kernel, [t], q, refinement, interval)[0])


@dataclass(frozen=True, eq=False)
class SigmaMatrix:
    """Information matrix <d_i mu, K d_j mu> with a condition-number estimate."""

    values: np.ndarray
    cond: float

    @property
    def p(self) -> int:
        return self.values.shape[0]


def _grad_density_callables(model: MeanModel, theta) -> list[Callable]:
    if isinstance(model, LinearDensity):
        return [lambda s, fk=fk: np.broadcast_to(np.asarray(fk(s), dtype=float), np.shape(s)) for fk in model.basis]
    if isinstance(model, NonlinearDensity):
        return [
            (lambda s, j=j: model.grad_density(theta, s)[j]) for j in range(model.p)
        ]
    raise UnsupportedModelError(f"no density derivatives for {type(model).__name__}")


def sigma_matrix(
    model: MeanModel,
    theta0,
    kernel: CovarianceKernel,
    q: Optional[CellQuadrature] = None,
    refinement: int = DEFAULT_REFINEMENT,
    interval: tuple[float, float] = (0.0, 1.0),
) -> SigmaMatrix:
    """Continuous information matrix at theta0 (exact sums for Dirac bases)."""
    theta0 = _check_theta(model.box, theta0)
    q = q or CellQuadrature()
    if isinstance(model, DiracBasis):
        values = np.asarray(
            kernel(model.sites[:, None], model.sites[None, :]), dtype=float
        )
    else:
        grads = _grad_density_callables(model, theta0)
        xs, ws = q.mapped_interval(interval[0], interval[1], refinement)
        gcols = [
            _kernel_density_integral(kernel, gj, xs, interval[0], interval[1], q, refinement)
            for gj in grads
        ]
        p = model.p
        values = np.empty((p, p))
        for i in range(p):
            fi = grads[i](xs)
            for j in range(p):
                values[i, j] = float(np.dot(ws, fi * gcols[j]))
    values = 0.5 * (values + values.T)
    return SigmaMatrix(values=values, cond=float(np.linalg.cond(values)))


def discrete_sigma(
    model: MeanModel,
    theta0,
    gram_matrix: GramMatrix,
    grid: TimeGrid,
    q: Optional[CellQuadrature] = None,
) -> SigmaMatrix:
    """Discretized information matrix J^T G J with J the cell-mass Jacobian."""
    q = q or CellQuadrature()
    jac = cell_mass_jacobian(model, theta0, grid, q)
    values = jac.T @ gram_matrix.values @ jac
    values = 0.5 * (values + values.T)
    return SigmaMatrix(values=values, cond=float(np.linalg.cond(values)))


def kernel_bilinear(
    model: MeanModel,
    theta_a,
    theta_b,
    kernel: CovarianceKernel,
    q: Optional[CellQuadrature] = None,
    refinement: int = DEFAULT_REFINEMENT,
    interval: tuple[float, float] = (0.0, 1.0),
    sigma_cont: Optional[SigmaMatrix] = None,
) -> float:
    """Continuous bilinear form <mu_{theta_a}, K mu_{theta_b}>.

    For linear-in-theta models this is theta_a^T Sigma theta_b, so a
    precomputed ``sigma_cont`` short-circuits the quadrature.
    """
    theta_a = _check_theta(model.box, theta_a)
    theta_b = _check_theta(model.box, theta_b)
    q = q or CellQuadrature()
    if isinstance(model, DiracBasis):
        kmat = np.asarray(kernel(model.sites[:, None], model.sites[None, :]), dtype=float)
        return float(theta_a @ kmat @ theta_b)
    if isinstance(model, LinearDensity):
        sig = sigma_cont or sigma_matrix(model, theta_a, kernel, q, refinement, interval)
        return float(theta_a @ sig.values @ theta_b)
    xs, ws = q.mapped_interval(interval[0], interval[1], refinement)
    gb = _kernel_density_integral(
        kernel, lambda s: model.density(theta_b, s), xs, interval[0], interval[1], q, refinement
    )
    return float(np.dot(ws, model.density(theta_a, xs) * gb))
