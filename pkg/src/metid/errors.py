"""Exception hierarchy shared by all metid modules."""


class MetidError(Exception):
    """Base class for every error raised by metid."""


class DomainError(MetidError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class ConfigurationError(MetidError, ValueError):
    """Invalid grid, dictionary, search, or pipeline configuration."""


class NumericalError(MetidError, ArithmeticError):
    """A linear system is singular or too ill-conditioned to trust."""


class StabilityError(NumericalError):
    """The discretization lost its diffusion-like coefficient (C_h <= 0)."""


class ConditioningError(NumericalError):
    """A least-squares design matrix is rank deficient."""

    def __init__(self, message, atoms=()):
        super().__init__(message)
        self.atoms = tuple(atoms)


class DegenerateFitError(MetidError):
    """Thresholding removed every atom although the targets are not negligible."""


class ConvergenceError(MetidError):
    """An iteration did not reach its fixed point within the allowed budget."""


class IndeterminateError(MetidError):
    """Both u_f' and u_f'' vanish, so neither drift branch is defined."""


class InsufficientDataError(MetidError):
    """Too few retained samples to fit the requested dictionary."""


class IdentificationError(MetidError):
    """Every candidate of a grid search failed."""

    def __init__(self, message, reasons=None):
        super().__init__(message)
        self.reasons = dict(reasons or {})


class ParseError(MetidError, ValueError):
    """Malformed observation or configuration file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
