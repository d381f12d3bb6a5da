"""Estimation of parametric mean functions of Gaussian processes observed
discretely under small noise: simulation, the discretized likelihood
contrast, closed-form and numerical M-estimators, asymptotic covariances,
model-selection criteria, and a reproducible Monte Carlo harness.
"""

from ._backend import HAVE_EXTENSION, backend_name
from .errors import (
    ConfigError,
    NotPositiveSemidefiniteError,
    NumericalError,
    SingularInformationError,
    UnsupportedModelError,
)
from .estimation import (
    ContrastContext,
    EstimationResult,
    LanStatistic,
    contrast,
    contrast_gradient,
    contrast_hessian,
    estimate,
    estimate_linear,
    lan_statistic,
    limit_contrast,
    maximize_box,
    qgaic,
)
from .experiments import (
    BiasReport,
    CaseReport,
    ExperimentConfig,
    McReport,
    emit,
    emit_bias,
    moment_check,
    normality_diagnostics,
    qgaic_bias,
    rate_condition_table,
    run_mc,
)
from .kernels import (
    BrownianBridge,
    CovarianceKernel,
    CustomKernel,
    FractionalBrownian,
    GramMatrix,
    MarkovFactorable,
    OrnsteinUhlenbeck,
    Wiener,
    discretization_error_sup,
    gram,
)
from .mean_models import (
    DiracBasis,
    LinearDensity,
    MeanModel,
    NonlinearDensity,
    ParamBox,
    SigmaMatrix,
    cell_mass_jacobian,
    cell_masses,
    discrete_sigma,
    kernel_bilinear,
    mean_function,
    mean_vector,
    sigma_matrix,
)
from .sampling import Observation, SeedSpec, chol_factor, sample_observation
from .timegrid import CellQuadrature, TimeGrid, cell_index, integrate_cell, uniform_grid

__version__ = "0.1.0"

__all__ = [
    "BiasReport",
    "BrownianBridge",
    "CaseReport",
    "CellQuadrature",
    "ConfigError",
    "ContrastContext",
    "CovarianceKernel",
    "CustomKernel",
    "DiracBasis",
    "EstimationResult",
    "ExperimentConfig",
    "FractionalBrownian",
    "GramMatrix",
    "HAVE_EXTENSION",
    "LanStatistic",
    "LinearDensity",
    "MarkovFactorable",
    "McReport",
    "MeanModel",
    "NonlinearDensity",
    "NotPositiveSemidefiniteError",
    "NumericalError",
    "Observation",
    "OrnsteinUhlenbeck",
    "ParamBox",
    "SeedSpec",
    "SigmaMatrix",
    "SingularInformationError",
    "TimeGrid",
    "UnsupportedModelError",
    "Wiener",
    "backend_name",
    "cell_index",
    "cell_mass_jacobian",
    "cell_masses",
    "chol_factor",
    "contrast",
    "contrast_gradient",
    "contrast_hessian",
    "discrete_sigma",
    "discretization_error_sup",
    "emit",
    "emit_bias",
    "estimate",
    "estimate_linear",
    "gram",
    "integrate_cell",
    "kernel_bilinear",
    "lan_statistic",
    "limit_contrast",
    "maximize_box",
    "mean_function",
    "mean_vector",
    "moment_check",
    "normality_diagnostics",
    "qgaic",
    "qgaic_bias",
    "rate_condition_table",
    "run_mc",
    "sample_observation",
    "sigma_matrix",
    "uniform_grid",
]
