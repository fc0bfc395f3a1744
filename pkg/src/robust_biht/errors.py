"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """An argument is outside the operation's domain."""


class PreconditionError(InvalidArgument):
    """A documented hypothesis of an operation does not hold."""


class ResourceError(RuntimeError):
    """A request would exceed a memory or enumeration guard."""


class DegenerateIterate(ArithmeticError):
    """Top-k thresholding produced the zero vector, so it cannot be normalized."""
