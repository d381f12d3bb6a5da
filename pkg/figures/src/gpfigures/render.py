"""Figure rendering from the files emitted by `gpmean mc`.

Strictly a read-only consumer: histogram bins, QQ pairs and the asymptotic
standard deviation all come from the emitted files (histogram.csv, qq.csv,
paths.csv, summary.json); nothing is re-estimated here.  The only
computation is evaluating the overlaid normal density at plot points.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

KINDS = ("paths", "hist", "qq")

PATH_COLOR = "tab:blue"
TRUE_MEAN_COLOR = "tab:orange"
FITTED_MEAN_COLOR = "black"


class MissingCaseError(KeyError):
    """The requested (n, eps) case is absent from the emitted files."""


@dataclass(frozen=True)
class FigureJob:
    input_dir: str
    kind: str
    out_path: str
    n: int
    eps: float
    component: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")


def parse_case(text: str) -> tuple[int, float]:
    """Parse a case selector of the form 'n=1000,eps=0.1'."""
    fields = {}
    for part in text.split(","):
        key, _, value = part.partition("=")
        fields[key.strip()] = value.strip()
    try:
        return int(fields["n"]), float(fields["eps"])
    except KeyError as exc:
        raise ValueError(f"case selector needs n=<int>,eps=<float>: {text!r}") from exc


def _same_case(row_n: str, row_eps: str, n: int, eps: float) -> bool:
    return int(row_n) == n and math.isclose(float(row_eps), eps, rel_tol=1e-9)


def _read_rows(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _load_summary(input_dir: str) -> dict:
    with open(os.path.join(input_dir, "summary.json")) as fh:
        return json.load(fh)


def _case_rows(job: FigureJob, filename: str) -> list[dict]:
    rows = [
        r
        for r in _read_rows(os.path.join(job.input_dir, filename))
        if _same_case(r["n"], r["eps"], job.n, job.eps)
    ]
    if not rows:
        raise MissingCaseError(
            f"case n={job.n}, eps={job.eps:g} not found in {filename}"
        )
    return rows


def _case_label(job: FigureJob) -> str:
    return f"n = {job.n}, eps = {job.eps:g}"


def _render_paths(job: FigureJob, ax) -> dict:
    rows = _case_rows(job, "paths.csv")
    t = np.array([float(r["t"]) for r in rows])
    ax.plot(t, [float(r["x"]) for r in rows], color=PATH_COLOR, lw=0.8,
            label="observation")
    ax.plot(t, [float(r["h_true"]) for r in rows], color=TRUE_MEAN_COLOR, lw=1.8,
            label="true mean")
    ax.plot(t, [float(r["h_hat"]) for r in rows], color=FITTED_MEAN_COLOR, lw=1.2,
            ls="--", label="fitted mean")
    ax.set_xlabel("t")
    ax.set_ylabel("X(t)")
    ax.legend(loc="best", fontsize=8)
    return {"series": 3}


def _render_hist(job: FigureJob, ax) -> dict:
    rows = [r for r in _case_rows(job, "histogram.csv")
            if int(r["component"]) == job.component]
    if not rows:
        raise MissingCaseError(f"component {job.component} missing from histogram.csv")
    left = np.array([float(r["bin_left"]) for r in rows])
    right = np.array([float(r["bin_right"]) for r in rows])
    counts = np.array([int(r["count"]) for r in rows])
    width = right - left
    ax.bar(left, counts, width=width, align="edge", color=PATH_COLOR,
           edgecolor="white", lw=0.3)
    summary = _load_summary(job.input_dir)
    sigma = float(summary["asymptotic_sd"][job.component - 1])
    total = counts.sum()
    grid = np.linspace(left[0], right[-1], 400)
    if total > 0 and sigma > 0:
        density = np.exp(-0.5 * (grid / sigma) ** 2) / (sigma * np.sqrt(2 * np.pi))
        ax.plot(grid, total * width.mean() * density, color=TRUE_MEAN_COLOR, lw=1.8)
    ax.set_xlabel("standardized error")
    ax.set_ylabel("count")
    return {"sigma_overlay": sigma, "total_count": int(total)}


def _render_qq(job: FigureJob, ax) -> dict:
    rows = [r for r in _case_rows(job, "qq.csv")
            if int(r["component"]) == job.component]
    if not rows:
        raise MissingCaseError(f"component {job.component} missing from qq.csv")
    theo = np.array([float(r["theoretical"]) for r in rows])
    emp = np.array([float(r["empirical"]) for r in rows])
    ax.scatter(theo, emp, s=6, color=PATH_COLOR)
    lo = min(theo.min(), emp.min())
    hi = max(theo.max(), emp.max())
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    ax.plot([lo, hi], [lo, hi], color=TRUE_MEAN_COLOR, lw=1.2)
    ax.set_xlabel("theoretical quantile")
    ax.set_ylabel("empirical quantile")
    return {"points": len(rows)}


_RENDERERS = {"paths": _render_paths, "hist": _render_hist, "qq": _render_qq}


def render(job: FigureJob) -> dict:
    """Render one figure and return metadata about what was drawn."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4), dpi=150)
    try:
        meta = _RENDERERS[job.kind](job, ax)
        ax.set_title(_case_label(job), fontsize=10)
        fig.tight_layout()
        out_dir = os.path.dirname(os.path.abspath(job.out_path))
        os.makedirs(out_dir, exist_ok=True)
        fig.savefig(job.out_path)
    finally:
        plt.close(fig)
    meta.update({"kind": job.kind, "out": job.out_path, "n": job.n, "eps": job.eps})
    return meta
