"""Discrete log-symmetric distributions: evaluation, fitting and simulation."""

from .errors import (
    DataError,
    DislogError,
    DomainError,
    FitInfeasibleError,
    KernelSingularityError,
    MomentDivergenceError,
    QuadratureError,
)
from .kernels import Family, KernelSpec

__version__ = "0.1.0"
