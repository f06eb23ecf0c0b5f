"""Energy-preserving discrete gradient methods of arbitrary order for skew-gradient ODEs."""

from ._kernels import BACKEND
from .catalog import SCHEME_NAMES, builtin_scheme, get_scheme
from .core import PROBLEMS, Problem, SkewGradientSystem, get_problem, load_problem
from .dg import DG_NAMES, DGKind, DiscreteGradient, discrete_gradient
from .errors import (
    CatalogError,
    ConfigurationError,
    DgflowError,
    DomainError,
    InputError,
    NumericalError,
    SolverError,
    ValidationError,
)
from .sbar import SbarScheme, SbarTerm, SchemeBuilder, StageGraph, eval_sbar

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CatalogError",
    "ConfigurationError",
    "DGKind",
    "DG_NAMES",
    "DgflowError",
    "DiscreteGradient",
    "DomainError",
    "InputError",
    "NumericalError",
    "PROBLEMS",
    "Problem",
    "SCHEME_NAMES",
    "SbarScheme",
    "SbarTerm",
    "SchemeBuilder",
    "SkewGradientSystem",
    "SolverError",
    "StageGraph",
    "ValidationError",
    "builtin_scheme",
    "discrete_gradient",
    "eval_sbar",
    "get_problem",
    "get_scheme",
    "load_problem",
]
