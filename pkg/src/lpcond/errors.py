"""Exception types shared across the library."""


class DimensionMismatchError(ValueError):
    """Operands live on spheres of different dimension."""


class DegenerateSubsetError(RuntimeError):
    """A support subset has a numerically singular Gram matrix."""


class DegenerateHullError(RuntimeError):
    """Hull generators span a proper subspace; no interior exists."""


class DualEmptyError(RuntimeError):
    """The polar cone is {0}, i.e. the hull covers the whole sphere."""


class InstanceTooLargeError(ValueError):
    """Brute-force subset enumeration would exceed the safety guard."""


class ConvergenceError(RuntimeError):
    """Iterative solver hit its iteration cap without a certified answer.

    Carries the best available bracket on the quantity being solved for.
    """

    def __init__(self, message, lower=None, upper=None):
        super().__init__(message)
        self.lower = lower
        self.upper = upper


class ConfigError(ValueError):
    """An experiment configuration violates a documented precondition."""
