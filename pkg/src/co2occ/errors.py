"""Exception types shared across the package."""


class DomainError(ValueError):
    """A parameter or input lies outside its valid domain."""


class NoDecayError(DomainError):
    """A decay fit was requested on data that does not decay."""


class ConvergenceError(RuntimeError):
    """An iterative fit failed to converge; carries the best fit found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ParseError(ValueError):
    """A file could not be parsed; carries the offending line number."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class StructureError(ValueError):
    """Shapes or configuration are inconsistent with the model structure."""


class NumericalError(RuntimeError):
    """A computation produced non-finite or diverging values."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class FormatError(ValueError):
    """A serialized artifact has an unreadable or unsupported format."""


class DegenerateDataError(DomainError):
    """Input data is degenerate for the requested fit (e.g. single class)."""
