"""Exception types shared across the library.

Every error raised on purpose derives from MetrikosError so callers (and the
CLI exit-code mapping) can tell deliberate rejections from genuine bugs.
"""

from __future__ import annotations


class MetrikosError(Exception):
    """Base class for all deliberate errors raised by this package."""


class InvalidInputError(MetrikosError):
    """Input violates a documented precondition (bad shape, bad data)."""


class ShapeMismatchError(InvalidInputError):
    """Point data does not match the space's declared ambient shape."""


class InfeasibleCoordsError(InvalidInputError):
    """A coordinate tuple fails the feasibility inequalities.

    Carries the offending FeasibilityReport in .report.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NoConvergenceError(MetrikosError):
    """An iterative solver ran out of iterations before reaching tolerance.

    .best holds the last iterate, .residual its max residual.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class DegenerateConfigurationError(MetrikosError):
    """A linear system arising from the geometry is singular."""


class InvalidFieldError(MetrikosError):
    """A field component returned a non-finite value or failed to evaluate."""


class IntegrationError(MetrikosError):
    """A field evaluation failed mid-integration.

    .trajectory holds the partial trajectory computed so far.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class EmptyLocusError(MetrikosError):
    """Locus parameters admit no points, or sampling exhausted its budget."""


class ExpressionError(InvalidInputError):
    """A scenario expression failed to parse or referenced unknown names.

    .position is a (line, column) pair when available.
    """

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


class ScenarioError(InvalidInputError):
    """A scenario config file is missing keys or has bad values."""
