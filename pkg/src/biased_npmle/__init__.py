"""Nonparametric estimation of a lifetime law under known biased sampling and censoring."""

from .core import (
    CdfTable,
    Constant,
    CumulativeRate,
    DiscreteDistribution,
    DistributionCdf,
    DistSpec,
    Linear,
    Sample,
    Scaled,
    ShiftedLinear,
    Step,
    TruncatedInterval,
    TruncatedRecord,
    TruncatedSample,
    build_weight,
)
from .em import EmConfig, Fit, estimate_from_age_residual, fit_npmle, survival_at
from .ple import fit_ple, ple_defined
from .support import reduce_support

__version__ = "0.1.0"

__all__ = [
    "CdfTable", "Constant", "CumulativeRate", "DiscreteDistribution", "DistributionCdf",
    "DistSpec", "Linear", "Sample", "Scaled", "ShiftedLinear", "Step", "TruncatedInterval",
    "TruncatedRecord", "TruncatedSample", "build_weight", "EmConfig", "Fit",
    "estimate_from_age_residual", "fit_npmle", "survival_at", "fit_ple", "ple_defined",
    "reduce_support",
]
