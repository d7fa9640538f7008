"""Exception hierarchy shared by all modules."""


class HomTreeError(Exception):
    """Base class for every error raised by homtree."""


class DomainError(HomTreeError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class SingularityError(DomainError):
    """Evaluation requested too close to a pole or removable singularity."""


class ResolutionError(HomTreeError, ValueError):
    """A spectral grid is too coarse for the requested output radius."""

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class TruncationError(HomTreeError, RuntimeError):
    """Mass leaked past the radial truncation, so results are not trustworthy."""

    def __init__(self, message, leaked=None):
        super().__init__(message)
        self.leaked = leaked


class TreeSizeError(HomTreeError, MemoryError):
    """An explicit truncated tree would exceed the vertex budget."""


class DivergenceError(DomainError):
    """A norm or series diverges for the requested exponent."""


class FitError(HomTreeError, ValueError):
    """Data are too degenerate for a decay fit."""


class NonAdmissibleError(DomainError):
    """An exponent pair lies outside the admissible square."""


class BlowUpError(HomTreeError, RuntimeError):
    """The sup norm of an evolving solution exceeded the blow-up guard."""

    def __init__(self, message, time=None, sup_norm=None):
        super().__init__(message)
        self.time = time
        self.sup_norm = sup_norm


class ConfigError(HomTreeError, ValueError):
    """An experiment configuration failed validation."""
