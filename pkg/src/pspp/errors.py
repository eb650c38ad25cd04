"""Exception hierarchy shared by all modules."""


class PSPPError(Exception):
    """Base class for errors raised by this package."""


class NumericalError(PSPPError):
    """A numerical precondition failed (singular, non-PSD, ...)."""


class SingularMatrixError(NumericalError):
    def __init__(self, message, condition=None, eigenvalue=None):
        super().__init__(message)
        self.condition = condition
        self.eigenvalue = eigenvalue


class NotPSDError(NumericalError):
    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class DimensionError(PSPPError, ValueError):
    pass


class DomainError(PSPPError, ValueError):
    """An argument lies outside the support or parameter domain."""


class DegreesOfFreedomError(DomainError):
    """Too few degrees of freedom for the requested moment."""


class ConfigError(PSPPError):
    def __init__(self, message, line=None, column=None, field=None):
        loc = []
        if field is not None:
            loc.append(f"field {field!r}")
        if line is not None:
            loc.append(f"line {line}" + (f", column {column}" if column is not None else ""))
        super().__init__(message + (f" ({'; '.join(loc)})" if loc else ""))
        self.line = line
        self.column = column
        self.field = field


class DataError(PSPPError):
    def __init__(self, message, row=None, column=None, path=None):
        super().__init__(message)
        self.row = row
        self.column = column
        self.path = path
