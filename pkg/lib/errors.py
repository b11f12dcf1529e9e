"""Exception hierarchy shared by the library modules and the CLI."""


class QiToolkitError(Exception):
    """Base exception for qi-toolkit errors"""

    pass


class DimensionError(QiToolkitError, ValueError):
    """Operands with non-conformable shapes"""

    pass


class DomainError(QiToolkitError):
    """I - GK (or a resolvent along the homotopy) is numerically singular."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class InertnessError(QiToolkitError):
    """Spectral radius of (GK)(0) is not below one, so I - GK has no causal inverse."""

    def __init__(self, message, radius=None):
        super().__init__(message)
        self.radius = radius


class QiViolationError(QiToolkitError):
    """Synthesis refused because S is not quadratically invariant under G."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SchemaError(QiToolkitError, ValueError):
    """Input document does not match the documented JSON schemas."""

    def __init__(self, message, path=None, line=None, key=None):
        super().__init__(message)
        self.message = message
        self.path = path
        self.line = line
        self.key = key


class ProbeError(QiToolkitError, ValueError):
    """Invalid sampling or probing request"""

    pass


class ConfigurationError(QiToolkitError):
    """Configuration related errors"""

    pass
