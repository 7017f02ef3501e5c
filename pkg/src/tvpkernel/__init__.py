"""Kernel estimation of time-varying coefficients in linear models."""

from .errors import (
    ConfigError,
    EmptyWindow,
    EstimationError,
    InvalidInput,
    ParseError,
    SingularGram,
)
from .estimator import (
    Bandwidth,
    TimeSeriesData,
    TvpEstimate,
    estimate_path,
    gram_condition_report,
    leave_out_estimate,
    local_constant_estimate,
)
from .kernels import EPANECHNIKOV, UNIFORM, KernelSpec, get_kernel, l2_norm_squared

__version__ = "0.1.0"

__all__ = [
    "Bandwidth",
    "ConfigError",
    "EPANECHNIKOV",
    "EmptyWindow",
    "EstimationError",
    "InvalidInput",
    "KernelSpec",
    "ParseError",
    "SingularGram",
    "TimeSeriesData",
    "TvpEstimate",
    "UNIFORM",
    "estimate_path",
    "get_kernel",
    "gram_condition_report",
    "l2_norm_squared",
    "leave_out_estimate",
    "local_constant_estimate",
]
