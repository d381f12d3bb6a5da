import copy

import numpy as np
import pytest

import gpmean as gm
from gpmean.config import PAPER42, config_from_dict, preset_config

#: Continuous information constant of the study configuration, computed
#: independently (adaptive quadrature split at the kernel diagonal, mpmath
#: cross-check, midpoint Riemann):
#: 36 * iint K(s,t) sin(-7.9 s) sin(-7.9 t) ds dt, K = OU(eta=1/2, sigma=1).
SIGMA_42 = 0.2877967184729678
#: p=2 extension (second density 6*cos(-7.9 s)), same oracle.
SIGMA_42_P2 = np.array(
    [[0.28779671847297, -0.03085853753826], [-0.03085853753826, 0.55270423941997]]
)


def study_kernel() -> gm.OrnsteinUhlenbeck:
    return gm.OrnsteinUhlenbeck(eta=0.5, sigma=1.0)


def study_model() -> gm.LinearDensity:
    return gm.LinearDensity(
        basis=[lambda s: 6.0 * np.sin(-7.9 * np.asarray(s))],
        box=gm.ParamBox([-10.0], [10.0]),
    )


def study_config_dict(**overrides) -> dict:
    raw = copy.deepcopy(PAPER42)
    raw.update(overrides)
    return raw


@pytest.fixture(scope="session")
def quad() -> gm.CellQuadrature:
    return gm.CellQuadrature(8)


@pytest.fixture(scope="session")
def paper42_report() -> gm.McReport:
    """Full four-case study with 1000 replications, shared across tests."""
    return gm.run_mc(preset_config("paper42"), threads=1)


def small_config(cases, replications, seed=777, **overrides):
    raw = study_config_dict(
        cases=[{"n": n, "eps": eps} for n, eps in cases],
        replications=replications,
        master_seed=seed,
        **overrides,
    )
    return config_from_dict(raw)
