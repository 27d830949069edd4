"""Exception hierarchy for :mod:`tsfrac`."""

from __future__ import annotations


class TsfracError(Exception):
    """Base class for every error raised by the package."""


class ScaleError(TsfracError, ValueError):
    """Invalid time-scale construction."""


class OverlapError(ScaleError):
    pass


class DegenerateScaleError(ScaleError):
    pass


class NotInScaleError(TsfracError, ValueError):
    pass


class NotANodeError(TsfracError, ValueError):
    pass


class ResolutionError(TsfracError):
    """A mesh or operator would exceed the configured size cap."""


class DomainError(TsfracError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class BadExponentError(DomainError):
    pass


class SingularKernelError(TsfracError, ArithmeticError):
    """The literal kernel ``(t - sigma(s))**(alpha - 1)`` was sampled at zero."""


class SolverError(TsfracError):
    """Numerical failure inside the variational solver."""


class LineSearchFailure(SolverError):
    pass


class EndpointNotFound(SolverError):
    pass


class SchemaError(TsfracError, ValueError):
    """Configuration failed validation."""
