"""Exception types raised across the package."""


class CogsecError(Exception):
    """Base class for all package errors."""


class DimensionError(CogsecError, ValueError):
    """Operands have incompatible sizes."""


class ValidationError(CogsecError, ValueError):
    """An object violates its type invariants (normalization, unitarity, ...)."""


class DegenerateBundleError(CogsecError, ArithmeticError):
    """A per-cogit amplitude sum vanished while bundling."""


class MethodInapplicableError(CogsecError, ValueError):
    """The requested numerical method does not converge for this input."""


class ConfigError(CogsecError, ValueError):
    """An objective, optimizer or scenario configuration is invalid.

    ``violations`` lists every problem found, not just the first.
    """

    def __init__(self, message, violations=None):
        self.violations = list(violations or [])
        if self.violations:
            message = message + ": " + "; ".join(self.violations)
        super().__init__(message)
