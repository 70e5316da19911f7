"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operand shapes are incompatible."""


class DomainError(ValueError):
    """Input values are outside the mathematical domain (NaN/inf or out of range)."""


class RangeError(ValueError):
    """A design or label component lies outside its declared range."""


class CapabilityError(RuntimeError):
    """Requested operation is unsupported for this configuration (e.g. second-order
    differentiation through an activation without a usable second derivative)."""


class NumericError(ArithmeticError):
    """A computation produced non-finite values."""


class DivergenceError(RuntimeError):
    """Training produced NaN/inf losses and was aborted."""


class ConfigError(ValueError):
    """Invalid or unknown configuration keys/values."""
