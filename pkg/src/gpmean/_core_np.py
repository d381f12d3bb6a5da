"""Pure-NumPy fallbacks for the compiled kernel surface scans.

Operates on an arbitrary broadcasting kernel callable, so this path also
serves kernels with no closed-form code (factorable/custom variants).
The sup scan is blocked to keep temporaries bounded at large n*refinement.
"""

from __future__ import annotations

from typing import Callable

import numpy as np


def gram_from_callable(kfun: Callable, nodes: np.ndarray) -> np.ndarray:
    return np.asarray(kfun(nodes[:, None], nodes[None, :]), dtype=float)


def sup_error_from_callable(
    kfun: Callable, edges: np.ndarray, refinement: int, block: int = 512
) -> float:
    edges = np.asarray(edges, dtype=float)
    widths = np.diff(edges)
    offsets = (np.arange(refinement) + 0.5) / refinement
    pts = (edges[:-1, None] + offsets[None, :] * widths[:, None]).ravel()
    nod = np.repeat(edges[1:], refinement)
    best = 0.0
    for lo in range(0, pts.size, block):
        sl = slice(lo, min(lo + block, pts.size))
        err = np.abs(
            kfun(nod[sl][:, None], nod[None, :]) - kfun(pts[sl][:, None], pts[None, :])
        )
        best = max(best, float(err.max()))
    return best
