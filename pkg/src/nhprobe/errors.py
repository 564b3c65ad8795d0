"""Exception hierarchy shared by every nhprobe module."""


class NHProbeError(Exception):
    """Base class for all errors raised by nhprobe."""


class DegenerateInputError(NHProbeError, ValueError):
    """Input violates a structural precondition (zero leading coefficient, ...)."""


class EmptyRootsError(DegenerateInputError):
    """A constant polynomial has no roots to find."""


class DegenerateFitError(DegenerateInputError):
    """Least-squares fit is undetermined (all abscissae equal, too few points)."""


class DegenerateSymbolError(DegenerateInputError):
    """The band symbol Q(beta) is constant, so no saddle equation exists."""


class UnsupportedModelError(NHProbeError, ValueError):
    """Requested method is only available for specific named models."""


class NumericalFailure(NHProbeError, ArithmeticError):
    """An iterative kernel did not converge.

    ``diagnostics`` carries whatever the kernel knew at the time of failure
    (iteration counts, residuals, the unconverged index).
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class ExceptionalPointError(NumericalFailure):
    """Q(beta) vanishes where a diagonalizable Bloch Hamiltonian is required."""


class InstabilityError(NumericalFailure):
    """Time stepping produced NaN/Inf; the step size is too large."""


class InsufficientDataError(NumericalFailure):
    """Too few finite samples survive to estimate a growth rate."""
