"""JSON configuration: kernel/model registries, validation, and presets.

Schema (all keys required unless noted):

    {
      "kernel": {"kind": "ou", "eta": 0.5, "sigma": 1.0},
      "model": {"kind": "linear_density",
                "basis": [{"kind": "sine", "amp": 6.0, "freq": -7.9}],
                "box": {"lower": [-10.0], "upper": [10.0]}},
      "theta0": [-4.0],
      "interval": [0.0, 1.0],            # optional, default [0, 1]
      "cases": [{"n": 100, "eps": 0.1}, ...],
      "replications": 1000,
      "master_seed": 20240801,
      "quad_order": 8                    # optional
    }

Custom kernels and nonlinear densities are library-level only and not
expressible in config.
"""

from __future__ import annotations

import copy
import json

import numpy as np

from .errors import ConfigError
from .experiments import ExperimentConfig
from .kernels import (
    BrownianBridge,
    CovarianceKernel,
    FractionalBrownian,
    OrnsteinUhlenbeck,
    Wiener,
)
from .mean_models import DiracBasis, LinearDensity, MeanModel, ParamBox


def _require(spec: dict, key: str, where: str):
    if key not in spec:
        raise ConfigError(f"missing '{key}' in {where}")
    return spec[key]


def basis_from_spec(spec: dict):
    kind = _require(spec, "kind", "basis entry")
    if kind == "constant":
        value = float(_require(spec, "value", "constant basis"))
        return lambda s: np.full(np.shape(s), value)
    if kind == "polynomial":
        coeffs = [float(c) for c in _require(spec, "coeffs", "polynomial basis")]
        return lambda s: np.polynomial.polynomial.polyval(np.asarray(s, dtype=float), coeffs)
    if kind == "sine":
        amp = float(_require(spec, "amp", "sine basis"))
        freq = float(_require(spec, "freq", "sine basis"))
        return lambda s: amp * np.sin(freq * np.asarray(s, dtype=float))
    if kind == "cosine":
        amp = float(_require(spec, "amp", "cosine basis"))
        freq = float(_require(spec, "freq", "cosine basis"))
        return lambda s: amp * np.cos(freq * np.asarray(s, dtype=float))
    if kind == "exponential":
        amp = float(_require(spec, "amp", "exponential basis"))
        rate = float(_require(spec, "rate", "exponential basis"))
        return lambda s: amp * np.exp(rate * np.asarray(s, dtype=float))
    raise ConfigError(f"unknown basis kind '{kind}'")


def kernel_from_spec(spec: dict) -> CovarianceKernel:
    kind = _require(spec, "kind", "kernel spec")
    try:
        if kind == "wiener":
            return Wiener()
        if kind in ("bridge", "brownian_bridge"):
            return BrownianBridge()
        if kind == "ou":
            return OrnsteinUhlenbeck(
                eta=float(_require(spec, "eta", "ou kernel")),
                sigma=float(spec.get("sigma", 1.0)),
            )
        if kind == "fbm":
            return FractionalBrownian(hurst=float(_require(spec, "hurst", "fbm kernel")))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown kernel kind '{kind}'")


def model_from_spec(spec: dict) -> MeanModel:
    kind = _require(spec, "kind", "model spec")
    box_spec = _require(spec, "box", "model spec")
    try:
        box = ParamBox(
            lower=np.asarray(_require(box_spec, "lower", "box"), dtype=float),
            upper=np.asarray(_require(box_spec, "upper", "box"), dtype=float),
        )
        if kind == "dirac":
            return DiracBasis(sites=_require(spec, "sites", "dirac model"), box=box)
        if kind == "linear_density":
            basis = [basis_from_spec(b) for b in _require(spec, "basis", "model spec")]
            return LinearDensity(basis=basis, box=box)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown model kind '{kind}'")


def config_from_dict(raw: dict) -> ExperimentConfig:
    kernel = kernel_from_spec(_require(raw, "kernel", "config"))
    model = model_from_spec(_require(raw, "model", "config"))
    theta0 = np.asarray(_require(raw, "theta0", "config"), dtype=float)
    cases = []
    for case in _require(raw, "cases", "config"):
        n = int(_require(case, "n", "case"))
        eps = float(_require(case, "eps", "case"))
        if n < 1 or eps <= 0:
            raise ConfigError("each case needs n >= 1 and eps > 0")
        cases.append((n, eps))
    if not cases:
        raise ConfigError("config needs at least one case")
    replications = int(_require(raw, "replications", "config"))
    if replications < 1:
        raise ConfigError("replications must be >= 1")
    interval = tuple(float(v) for v in raw.get("interval", (0.0, 1.0)))
    if len(interval) != 2 or not interval[0] < interval[1]:
        raise ConfigError("interval must be [left, right] with left < right")
    try:
        return ExperimentConfig(
            kernel=kernel,
            model=model,
            theta0=theta0,
            cases=cases,
            replications=replications,
            master_seed=int(_require(raw, "master_seed", "config")),
            quad_order=int(raw.get("quad_order", 8)),
            interval=interval,  # type: ignore[arg-type]
            raw=copy.deepcopy(raw),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(raw)


#: The four-case replication study on the zero-start OU process with the
#: single sine-density mean model (the builtin `--preset paper42`).
PAPER42 = {
    "kernel": {"kind": "ou", "eta": 0.5, "sigma": 1.0},
    "model": {
        "kind": "linear_density",
        "basis": [{"kind": "sine", "amp": 6.0, "freq": -7.9}],
        "box": {"lower": [-10.0], "upper": [10.0]},
    },
    "theta0": [-4.0],
    "interval": [0.0, 1.0],
    "cases": [
        {"n": 100, "eps": 0.1},
        {"n": 1000, "eps": 0.1},
        {"n": 100, "eps": 0.01},
        {"n": 1000, "eps": 0.01},
    ],
    "replications": 1000,
    "master_seed": 20240801,
    "quad_order": 8,
}

PRESETS = {"paper42": PAPER42}


def preset_config(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset '{name}' (available: {sorted(PRESETS)})")
    return config_from_dict(copy.deepcopy(PRESETS[name]))
