"""Exception types shared across the package."""


class RMLabError(Exception):
    """Base class for all rmlab errors."""


class PreconditionError(RMLabError, ValueError):
    """An operation was called outside its documented domain."""


class CapExceededError(PreconditionError):
    """An exhaustive routine was asked to run above its size cap."""

    def __init__(self, what: str, value: int, cap: int):
        super().__init__(f"{what}={value} exceeds cap {cap}")
        self.what = what
        self.value = value
        self.cap = cap


class InconsistentWordError(RMLabError):
    """A received word agrees with no codeword on its non-erased positions."""


class HypothesisWarning(UserWarning):
    """Parameters lie outside a theorem's stated hypotheses."""
