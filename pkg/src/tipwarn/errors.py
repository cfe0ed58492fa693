"""Exception hierarchy shared by every tipwarn module.

All library errors derive from :class:`TipwarnError` so callers can catch one
base class at pipeline boundaries.  The CLI maps subclasses to exit codes:
configuration problems exit 2, numerical or I/O failures exit 3, strict-mode
admissibility failures exit 4.
"""

from __future__ import annotations

__all__ = [
    "TipwarnError",
    "ConfigError",
    "StructuralError",
    "PreconditionError",
    "DomainError",
    "DegenerateDensityError",
    "ConvergenceError",
    "SolverQualityError",
    "NumericalFailureError",
    "AdmissibilityError",
    "NoEquilibriumError",
    "FoldCrossedError",
    "PhysicalRegimeError",
    "ExtrapolationError",
    "FitError",
]


class TipwarnError(Exception):
    """Base class for all tipwarn errors."""


class ConfigError(TipwarnError):
    """Invalid configuration: bad schema, unknown keys, inconsistent values."""


class StructuralError(TipwarnError):
    """Structurally incompatible inputs (shape, grid, or time mismatches)."""


class PreconditionError(TipwarnError):
    """A documented call precondition was violated."""


class DomainError(TipwarnError):
    """A value left the mathematical domain of an operation."""


class DegenerateDensityError(TipwarnError):
    """A density has no mass left to normalize or measure."""


class ConvergenceError(TipwarnError):
    """An iterative scheme exhausted its iteration budget."""


class SolverQualityError(TipwarnError):
    """Solver output failed a quality gate (sign, positivity, residual)."""


class NumericalFailureError(TipwarnError):
    """A linear solve or factorization failed outright."""


class AdmissibilityError(TipwarnError):
    """Discretization admissibility violated in strict mode."""


class NoEquilibriumError(TipwarnError):
    """The requested equilibrium does not exist for these inputs."""


class FoldCrossedError(NoEquilibriumError):
    """The slow parameter has crossed the fold; equilibria have vanished."""


class PhysicalRegimeError(TipwarnError):
    """Inputs left the physically meaningful regime of a closure."""


class ExtrapolationError(TipwarnError):
    """A lookup landed outside the tabulated range in strict mode."""


class FitError(TipwarnError):
    """A regression had too few points or an ill-conditioned design."""
