"""Command-line interface.

Subcommands: simulate, estimate, mc, qgaic-bias, rate-table, lan-check.
Exit codes: 0 success, 2 configuration error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .config import load_config, preset_config
from .errors import ConfigError, NumericalError
from .estimation import ContrastContext, estimate, lan_statistic
from .experiments import (
    emit,
    emit_bias,
    qgaic_bias,
    rate_condition_table,
    run_mc,
)
from .sampling import Observation, SeedSpec, chol_factor, sample_observation
from .kernels import gram
from .timegrid import uniform_grid


def _add_common(parser: argparse.ArgumentParser, needs_out: bool = True):
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--config", help="path to a config JSON")
    group.add_argument("--preset", help="builtin config name (e.g. paper42)")
    parser.add_argument("--seed", type=int, default=None, help="override master seed")
    parser.add_argument("--threads", type=int, default=1, help="worker threads")
    parser.add_argument("--out", required=needs_out, help="output directory")


def _resolve_config(args):
    config = load_config(args.config) if args.config else preset_config(args.preset)
    if args.seed is not None:
        config.master_seed = int(args.seed)
        if config.raw is not None:
            config.raw["master_seed"] = int(args.seed)
    return config


def _cmd_simulate(args) -> int:
    config = _resolve_config(args)
    quad = config.quadrature()
    os.makedirs(args.out, exist_ok=True)
    count = 0
    for case_idx, (n, eps) in enumerate(config.cases):
        grid = uniform_grid(n, *config.interval)
        chol = chol_factor(gram(config.kernel, grid))
        offset = case_idx * config.replications
        for r in range(config.replications):
            obs = sample_observation(
                config.model, config.theta0, config.kernel, grid, eps,
                SeedSpec(config.master_seed, offset + r), quad,
                config.refinement, chol=chol,
            )
            stem = f"observation_n{n}_eps{eps:g}_rep{r:04d}"
            obs.to_csv(os.path.join(args.out, stem + ".csv"))
            obs.to_json(os.path.join(args.out, stem + ".json"))
            count += 1
    print(f"wrote {count} observations to {args.out}")
    return 0


def _cmd_estimate(args) -> int:
    config = _resolve_config(args)
    if args.obs.endswith(".json"):
        obs = Observation.from_json(args.obs)
    else:
        if args.eps is None:
            raise ConfigError("--eps is required for CSV observations")
        obs = Observation.from_csv(args.obs, epsilon=args.eps, t_left=config.interval[0])
    ctx = ContrastContext(
        config.model, config.kernel, obs.grid, obs, config.quadrature(),
        refinement=config.refinement,
    )
    result = estimate(ctx)
    payload = {
        "theta_hat": [float(v) for v in result.theta_hat],
        "phi": result.phi_value,
        "qgaic": result.qgaic,
        "sigma_n": [[float(v) for v in row] for row in result.sigma_n.values],
        "sigma_n_cond": result.sigma_n.cond,
        "boundary_flag": result.boundary_flag,
        "optimizer_stats": result.optimizer_stats,
    }
    out = args.out
    if os.path.isdir(out) or not out.endswith(".json"):
        os.makedirs(out, exist_ok=True)
        out = os.path.join(out, "estimate.json")
    with open(out, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    print(f"wrote {out}")
    return 0


def _cmd_mc(args) -> int:
    config = _resolve_config(args)
    report = run_mc(config, threads=args.threads)
    files = emit(report, args.out)
    for c in report.cases:
        mean = ", ".join(f"{v:.5f}" for v in c.mean)
        sd = ", ".join(f"{v:.6f}" for v in c.sd)
        print(f"case (n={c.n}, eps={c.eps:g}): mean=[{mean}] sd=[{sd}]")
    print(f"wrote {len(files)} files to {args.out}")
    return 0


def _cmd_qgaic_bias(args) -> int:
    config = _resolve_config(args)
    report = qgaic_bias(config, threads=args.threads)
    path = emit_bias(report, args.out)
    for c in report.cases:
        warn = " [rate warning]" if c.rate_warning else ""
        print(
            f"case (n={c.n}, eps={c.eps:g}): bias/eps^2 = {c.mean:.4f} "
            f"+/- {c.mc_se:.4f} (target p={c.target_p}){warn}"
        )
    print(f"wrote {path}")
    return 0


def _cmd_rate_table(args) -> int:
    config = _resolve_config(args)
    ns = sorted({n for n, _ in config.cases})
    epss = sorted({eps for _, eps in config.cases})
    rows = rate_condition_table(config.kernel, ns, epss, interval=config.interval)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "rate_table.csv")
    with open(path, "w") as fh:
        fh.write("n,eps,sup_error,ratio,flagged\n")
        for row in rows:
            fh.write(
                f"{row['n']},{row['eps']:.17g},{row['sup_error']:.17g},"
                f"{row['ratio']:.17g},{int(row['flagged'])}\n"
            )
    for row in rows:
        flag = " FLAG" if row["flagged"] else ""
        print(
            f"n={row['n']} eps={row['eps']:g}: sup={row['sup_error']:.3e} "
            f"ratio={row['ratio']:.3e}{flag}"
        )
    print(f"wrote {path}")
    return 0


def _cmd_lan_check(args) -> int:
    config = _resolve_config(args)
    n, eps = max(config.cases)
    grid = uniform_grid(n, *config.interval)
    quad = config.quadrature()
    obs = sample_observation(
        config.model, config.theta0, config.kernel, grid, eps,
        SeedSpec(config.master_seed, 0), quad, config.refinement,
    )
    ctx = ContrastContext(config.model, config.kernel, grid, obs, quad,
                          refinement=config.refinement)
    rows = []
    for scale in (-1.0, 0.5, 1.0):
        u = np.full(config.model.p, scale)
        lan = lan_statistic(ctx, config.theta0, u)
        residual = lan.log_ratio - (lan.linear_term - 0.5 * lan.quadratic_term)
        rows.append(
            {
                "u": [float(v) for v in u],
                "log_ratio": lan.log_ratio,
                "linear_term": lan.linear_term,
                "quadratic_term": lan.quadratic_term,
                "identity_residual": residual,
                "quadratic_vs_usq": lan.quadratic_term - float(u @ u),
            }
        )
        print(
            f"u={scale:+.1f}: identity residual {residual:.3e}, "
            f"V(u) - |u|^2 = {rows[-1]['quadratic_vs_usq']:.3e}"
        )
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "lan_check.json")
    with open(path, "w") as fh:
        json.dump({"n": n, "eps": eps, "checks": rows}, fh, indent=1)
        fh.write("\n")
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpmean",
        description="Mean-function estimation for Gaussian processes under small noise",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw observations, one file per replication")
    _add_common(p)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("estimate", help="fit one observation file")
    _add_common(p)
    p.add_argument("--obs", required=True, help="observation CSV or JSON")
    p.add_argument("--eps", type=float, default=None, help="noise level for CSV input")
    p.set_defaults(fn=_cmd_estimate)

    p = sub.add_parser("mc", help="replicated simulate->estimate study")
    _add_common(p)
    p.set_defaults(fn=_cmd_mc)

    p = sub.add_parser("qgaic-bias", help="criterion bias experiment")
    _add_common(p)
    p.set_defaults(fn=_cmd_qgaic_bias)

    p = sub.add_parser("rate-table", help="discretization rate-condition table")
    _add_common(p)
    p.set_defaults(fn=_cmd_rate_table)

    p = sub.add_parser("lan-check", help="local quadratic-expansion identity check")
    _add_common(p)
    p.set_defaults(fn=_cmd_lan_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
