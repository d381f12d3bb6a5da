"""Monte Carlo harness: estimator replication studies, normality diagnostics,
the criterion-bias experiment, rate-condition tables, and file emission.

Replication r of case c draws its noise from the stream keyed by
(master_seed, c * replications + r); aggregation is a single-threaded
reduction in replication order, so results are identical for any worker
count and rerun.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from . import _backend
from .errors import NumericalError
from .estimation import ContrastContext, contrast, estimate, limit_contrast
from .kernels import CovarianceKernel, discretization_error_sup, gram
from .mean_models import (
    DEFAULT_REFINEMENT,
    MeanModel,
    SigmaMatrix,
    cell_mass_jacobian,
    sigma_matrix,
    mean_vector,
)
from .sampling import Observation, SeedSpec, chol_factor, sample_observation
from .timegrid import CellQuadrature, uniform_grid

HIST_BINS = 30
HIST_SPAN_SIGMAS = 4.0
RATE_FLAG_LIMIT = 0.1


@dataclass(eq=False)
class ExperimentConfig:
    """Complete description of one replication study."""

    kernel: CovarianceKernel
    model: MeanModel
    theta0: np.ndarray
    cases: list[tuple[int, float]]
    replications: int
    master_seed: int
    quad_order: int = 8
    interval: tuple[float, float] = (0.0, 1.0)
    refinement: int = DEFAULT_REFINEMENT
    raw: Optional[dict] = None

    def __post_init__(self):
        self.theta0 = np.atleast_1d(np.asarray(self.theta0, dtype=float))
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        for n, eps in self.cases:
            if n < 1 or eps < 0:
                raise ValueError("every case needs n >= 1 and eps >= 0")
        if not self.model.box.contains(self.theta0):
            raise ValueError("theta0 must lie inside the model box")

    def quadrature(self) -> CellQuadrature:
        return CellQuadrature(self.quad_order)


@dataclass(eq=False)
class NormalityDiagnostics:
    ks: np.ndarray                      # per component
    histogram: list[tuple[np.ndarray, np.ndarray]]   # (bin edges, counts)
    qq: list[tuple[np.ndarray, np.ndarray]]          # (theoretical, empirical)

    @property
    def ks_max(self) -> float:
        return float(np.max(self.ks))


@dataclass(eq=False)
class CaseReport:
    n: int
    eps: float
    theta: np.ndarray                   # (replications, p)
    mean: np.ndarray
    sd: np.ndarray
    standardized: np.ndarray            # (replications, p)
    boundary_hits: int
    dominance_violations: int
    sigma_n: SigmaMatrix
    second_moment: float
    moment_rel_dev: float
    diagnostics: Optional[NormalityDiagnostics]
    path_sample: dict                   # t, x, h_true, h_hat arrays


@dataclass(eq=False)
class McReport:
    sigma: SigmaMatrix                  # continuous information matrix
    cases: list[CaseReport]
    config: ExperimentConfig

    @property
    def asymptotic_sd(self) -> np.ndarray:
        return np.sqrt(np.diag(np.linalg.inv(self.sigma.values)))


@dataclass(eq=False)
class BiasCase:
    n: int
    eps: float
    mean: float
    mc_se: float
    target_p: int
    pairs: int
    rate_ratio: float
    rate_warning: bool
    values: np.ndarray


@dataclass(eq=False)
class BiasReport:
    cases: list[BiasCase]
    config: ExperimentConfig


def _map_ordered(fn, items, threads: int):
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass(eq=False)
class _CasePrep:
    grid: object
    gram: object
    chol: np.ndarray
    mean0: np.ndarray
    jacobian: Optional[np.ndarray]
    sigma_n: Optional[SigmaMatrix]


def _prepare_case(config: ExperimentConfig, n: int, quad: CellQuadrature) -> _CasePrep:
    grid = uniform_grid(n, *config.interval)
    g = gram(config.kernel, grid)
    chol = chol_factor(g)
    mean0 = mean_vector(
        config.model, config.theta0, config.kernel, grid.nodes, quad,
        config.refinement, interval=config.interval,
    )
    jacobian = sigma_n = None
    if config.model.is_linear:
        jacobian = cell_mass_jacobian(config.model, config.theta0, grid, quad)
        values = jacobian.T @ g.values @ jacobian
        values = 0.5 * (values + values.T)
        sigma_n = SigmaMatrix(values=values, cond=float(np.linalg.cond(values)))
    return _CasePrep(grid, g, chol, mean0, jacobian, sigma_n)


def _case_context(config, prep, obs, quad, sigma_cont=None) -> ContrastContext:
    return ContrastContext(
        config.model, config.kernel, prep.grid, obs, quad,
        gram_matrix=prep.gram, refinement=config.refinement,
        jacobian=prep.jacobian, sigma_n=prep.sigma_n, sigma_cont=sigma_cont,
    )


def moment_check(standardized: np.ndarray, sigma: SigmaMatrix) -> tuple[float, float]:
    """Empirical E|eps^{-1}(theta_hat - theta0)|^2 and its relative deviation
    from trace(Sigma^{-1})."""
    second = float(np.mean(np.sum(np.asarray(standardized) ** 2, axis=1)))
    target = float(np.trace(np.linalg.inv(sigma.values)))
    return second, abs(second - target) / target


def normality_diagnostics(
    standardized: np.ndarray, sigma: SigmaMatrix
) -> NormalityDiagnostics:
    """KS statistics, fixed-bin histograms and QQ pairs against N(0, Sigma^{-1})
    marginals."""
    standardized = np.asarray(standardized, dtype=float)
    if standardized.ndim == 1:
        standardized = standardized[:, None]
    n_reps = standardized.shape[0]
    if n_reps < 10:
        raise ValueError("need at least 10 replications for diagnostics")
    marg_sd = np.sqrt(np.diag(np.linalg.inv(sigma.values)))
    ks = np.empty(standardized.shape[1])
    hists = []
    qqs = []
    for j in range(standardized.shape[1]):
        col = standardized[:, j]
        sd_j = marg_sd[j]
        ks[j] = stats.kstest(col, "norm", args=(0.0, sd_j)).statistic
        span = HIST_SPAN_SIGMAS * sd_j
        counts, edges = np.histogram(col, bins=HIST_BINS, range=(-span, span))
        hists.append((edges, counts))
        probs = (np.arange(1, n_reps + 1) - 0.5) / n_reps
        qqs.append((stats.norm.ppf(probs, scale=sd_j), np.sort(col)))
    return NormalityDiagnostics(ks=ks, histogram=hists, qq=qqs)


def run_mc(config: ExperimentConfig, threads: int = 1) -> McReport:
    """Replicated simulate -> estimate pipelines for every case."""
    quad = config.quadrature()
    sigma = sigma_matrix(
        config.model, config.theta0, config.kernel, quad,
        config.refinement, config.interval,
    )
    reps = config.replications
    p = config.model.p
    cases = []
    for case_idx, (n, eps) in enumerate(config.cases):
        prep = _prepare_case(config, n, quad)
        offset = case_idx * reps

        def one(r, _prep=prep, _eps=eps, _offset=offset):
            obs = sample_observation(
                config.model, config.theta0, config.kernel, _prep.grid, _eps,
                SeedSpec(config.master_seed, _offset + r), quad,
                config.refinement, chol=_prep.chol, mean=_prep.mean0,
            )
            ctx = _case_context(config, _prep, obs, quad)
            result = estimate(ctx)
            phi0 = contrast(ctx, config.theta0)
            return result, phi0

        results = _map_ordered(one, range(reps), threads)
        theta = np.vstack([res.theta_hat for res, _ in results])
        boundary_hits = sum(res.boundary_flag for res, _ in results)
        dominance_violations = sum(
            res.phi_value < phi0 - 1e-10 * (1 + abs(phi0)) for res, phi0 in results
        )
        mean = theta.mean(axis=0)
        sd = theta.std(axis=0, ddof=1) if reps > 1 else np.zeros(p)
        if eps > 0:
            standardized = (theta - config.theta0[None, :]) / eps
        else:
            standardized = np.zeros_like(theta)
        second, rel_dev = moment_check(standardized, sigma)
        diag = (
            normality_diagnostics(standardized, sigma)
            if eps > 0 and reps >= 10
            else None
        )
        h_hat = mean_vector(
            config.model, results[0][0].theta_hat, config.kernel, prep.grid.nodes,
            quad, config.refinement, interval=config.interval,
        )
        # re-simulate replication 0 for the stored sample path
        obs0 = sample_observation(
            config.model, config.theta0, config.kernel, prep.grid, eps,
            SeedSpec(config.master_seed, offset), quad, config.refinement,
            chol=prep.chol, mean=prep.mean0,
        )
        cases.append(
            CaseReport(
                n=n, eps=eps, theta=theta, mean=mean, sd=sd,
                standardized=standardized, boundary_hits=int(boundary_hits),
                dominance_violations=int(dominance_violations),
                sigma_n=prep.sigma_n
                if prep.sigma_n is not None
                else results[0][0].sigma_n,
                second_moment=second, moment_rel_dev=rel_dev,
                diagnostics=diag,
                path_sample={
                    "t": prep.grid.nodes,
                    "x": obs0.values,
                    "h_true": prep.mean0,
                    "h_hat": h_hat,
                },
            )
        )
    return McReport(sigma=sigma, cases=cases, config=config)


def qgaic_bias(config: ExperimentConfig, threads: int = 1) -> BiasReport:
    """Empirical mean of (Phi_{n,eps}(theta_hat) - Phi(theta_hat)) / eps^2.

    Uses antithetic replication pairs (Z, -Z): the dominant fluctuation of
    the per-replication value is odd in the noise and cancels within each
    pair, shrinking the Monte Carlo standard error by roughly |theta0|/eps
    without biasing the estimate.  ``replications`` must be even; each pair
    consumes one noise stream.
    """
    if config.replications % 2:
        raise ValueError("replications must be even (antithetic pairs)")
    quad = config.quadrature()
    pairs = config.replications // 2
    sigma_cont = (
        sigma_matrix(
            config.model, config.theta0, config.kernel, quad,
            config.refinement, config.interval,
        )
        if config.model.is_linear
        else None
    )
    out = []
    for case_idx, (n, eps) in enumerate(config.cases):
        if eps <= 0:
            raise ValueError("criterion-bias cases need eps > 0")
        prep = _prepare_case(config, n, quad)
        grid = prep.grid
        sup_err = discretization_error_sup(config.kernel, grid, 8)
        rate_ratio = sup_err / eps**2
        offset = case_idx * pairs

        def one_pair(r, _prep=prep, _eps=eps, _offset=offset):
            g = SeedSpec(config.master_seed, _offset + r).generator()
            noise = _prep.chol @ g.standard_normal(_prep.grid.n)
            vals = []
            for sgn in (1.0, -1.0):
                obs = Observation(
                    grid=_prep.grid,
                    values=_prep.mean0 + _eps * sgn * noise,
                    epsilon=_eps,
                )
                ctx = _case_context(config, _prep, obs, quad, sigma_cont=sigma_cont)
                res = estimate(ctx)
                lim = limit_contrast(ctx, res.theta_hat, config.theta0)
                vals.append((res.phi_value - lim) / _eps**2)
            return 0.5 * (vals[0] + vals[1])

        values = np.asarray(_map_ordered(one_pair, range(pairs), threads))
        if not np.all(np.isfinite(values)):
            raise NumericalError("non-finite criterion-bias replication")
        mc_se = float(values.std(ddof=1) / math.sqrt(pairs)) if pairs > 1 else float("nan")
        out.append(
            BiasCase(
                n=n, eps=eps, mean=float(values.mean()), mc_se=mc_se,
                target_p=config.model.p, pairs=pairs,
                rate_ratio=float(rate_ratio),
                rate_warning=bool(rate_ratio >= RATE_FLAG_LIMIT),
                values=values,
            )
        )
    return BiasReport(cases=out, config=config)


def rate_condition_table(
    kernel: CovarianceKernel,
    grid_sizes,
    eps_values,
    refinement: int = 8,
    interval: tuple[float, float] = (0.0, 1.0),
) -> list[dict]:
    """Rows of eps^{-1} * sup|K^n - K| for each (n, eps), flagged at >= 0.1."""
    rows = []
    for n in grid_sizes:
        sup_err = discretization_error_sup(kernel, uniform_grid(n, *interval), refinement)
        for eps in eps_values:
            ratio = sup_err / eps
            rows.append(
                {
                    "n": int(n),
                    "eps": float(eps),
                    "sup_error": float(sup_err),
                    "ratio": float(ratio),
                    "flagged": bool(ratio >= RATE_FLAG_LIMIT),
                }
            )
    return rows


# ---------------------------------------------------------------------------
# File emission
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_csv(path, header: list[str], rows) -> None:
    try:
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def emit(report: McReport, out_dir) -> list[str]:
    """Write summary.json, table1.csv, standardized.csv, histogram.csv,
    qq.csv and paths.csv with stable ordering and 17-significant-digit floats."""
    os.makedirs(out_dir, exist_ok=True)
    p = report.config.model.p
    written = []

    sigma_inv = np.linalg.inv(report.sigma.values)
    summary = {
        "backend": _backend.backend_name(),
        "config": report.config.raw or {},
        "theta0": [float(v) for v in report.config.theta0],
        "replications": report.config.replications,
        "master_seed": report.config.master_seed,
        "sigma": [[float(v) for v in row] for row in report.sigma.values],
        "sigma_cond": report.sigma.cond,
        "sigma_inv": [[float(v) for v in row] for row in sigma_inv],
        "asymptotic_sd": [float(v) for v in report.asymptotic_sd],
        "cases": [
            {
                "n": c.n,
                "eps": c.eps,
                "mean": [float(v) for v in c.mean],
                "sd": [float(v) for v in c.sd],
                "boundary_hits": c.boundary_hits,
                "dominance_violations": c.dominance_violations,
                "second_moment": c.second_moment,
                "moment_rel_dev": c.moment_rel_dev,
                "ks": [float(v) for v in c.diagnostics.ks] if c.diagnostics else None,
                "sigma_n": [[float(v) for v in row] for row in c.sigma_n.values],
                "sigma_n_cond": c.sigma_n.cond,
            }
            for c in report.cases
        ],
    }
    path = os.path.join(out_dir, "summary.json")
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=False)
        fh.write("\n")
    written.append(path)

    header = ["n", "eps"]
    header += [f"mean_{k + 1}" for k in range(p)] + [f"sd_{k + 1}" for k in range(p)]
    rows = [
        [str(c.n), _fmt(c.eps)] + [_fmt(v) for v in c.mean] + [_fmt(v) for v in c.sd]
        for c in report.cases
    ]
    path = os.path.join(out_dir, "table1.csv")
    _write_csv(path, header, rows)
    written.append(path)

    header = ["n", "eps", "rep"] + [f"z_{k + 1}" for k in range(p)]
    rows = (
        [str(c.n), _fmt(c.eps), str(r)] + [_fmt(v) for v in c.standardized[r]]
        for c in report.cases
        for r in range(c.standardized.shape[0])
    )
    path = os.path.join(out_dir, "standardized.csv")
    _write_csv(path, header, rows)
    written.append(path)

    rows = []
    for c in report.cases:
        if c.diagnostics is None:
            continue
        for j, (edges, counts) in enumerate(c.diagnostics.histogram):
            for b in range(len(counts)):
                rows.append(
                    [str(c.n), _fmt(c.eps), str(j + 1), _fmt(edges[b]),
                     _fmt(edges[b + 1]), str(int(counts[b]))]
                )
    path = os.path.join(out_dir, "histogram.csv")
    _write_csv(path, ["n", "eps", "component", "bin_left", "bin_right", "count"], rows)
    written.append(path)

    rows = []
    for c in report.cases:
        if c.diagnostics is None:
            continue
        for j, (theo, emp) in enumerate(c.diagnostics.qq):
            for a, b in zip(theo, emp):
                rows.append([str(c.n), _fmt(c.eps), str(j + 1), _fmt(a), _fmt(b)])
    path = os.path.join(out_dir, "qq.csv")
    _write_csv(path, ["n", "eps", "component", "theoretical", "empirical"], rows)
    written.append(path)

    rows = (
        [str(c.n), _fmt(c.eps), _fmt(t), _fmt(x), _fmt(h), _fmt(hh)]
        for c in report.cases
        for t, x, h, hh in zip(
            c.path_sample["t"], c.path_sample["x"],
            c.path_sample["h_true"], c.path_sample["h_hat"],
        )
    )
    path = os.path.join(out_dir, "paths.csv")
    _write_csv(path, ["n", "eps", "t", "x", "h_true", "h_hat"], rows)
    written.append(path)
    return written


def emit_bias(report: BiasReport, out_dir) -> str:
    os.makedirs(out_dir, exist_ok=True)
    payload = {
        "target_p": report.config.model.p,
        "cases": [
            {
                "n": c.n,
                "eps": c.eps,
                "mean": c.mean,
                "mc_se": c.mc_se,
                "pairs": c.pairs,
                "rate_ratio": c.rate_ratio,
                "rate_warning": c.rate_warning,
            }
            for c in report.cases
        ],
    }
    path = os.path.join(out_dir, "qgaic_bias.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    return path
