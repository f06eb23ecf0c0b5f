"""Exception hierarchy.

Validation problems (bad names, bad shapes, incompatible pairings) derive from
``ValidationError``; failures while computing derive from ``NumericalError``.
The command line maps the two families to exit codes 1 and 2.
"""


class DgflowError(Exception):
    """Base class for all package errors."""


class ValidationError(DgflowError, ValueError):
    """Input that can be rejected before any numerics run."""


class NumericalError(DgflowError, ArithmeticError):
    """A computation failed or left its domain."""


class InputError(ValidationError):
    """Wrong dimension or malformed input."""


class ConfigurationError(ValidationError):
    """Incompatible combination of system, discrete gradient and scheme."""


class CatalogError(ValidationError, KeyError):
    """Unknown catalog name."""

    def __str__(self):
        return Exception.__str__(self)


class GraphError(ValidationError):
    """Malformed stage graph."""


class UnsupportedError(ValidationError):
    """The requested operation is not defined for this kind."""


class EvaluationError(NumericalError):
    """A map produced a non-finite value."""


class DomainError(NumericalError):
    """A point lies outside the domain of the energy."""


class SingularPointError(NumericalError):
    """The gradient vanishes where a nonzero gradient is needed."""


class SolverError(NumericalError):
    """The nonlinear solve did not converge.

    Attributes:
        residual: last residual norm reached.
        partial: partial trajectory when raised from ``integrate``.
    """

    def __init__(self, message, residual=float("nan"), partial=None):
        super().__init__(message)
        self.residual = residual
        self.partial = partial
