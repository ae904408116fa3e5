"""Exception hierarchy shared by every module."""


class InfMeasureError(Exception):
    """Base class for library errors."""


class DomainError(InfMeasureError, ValueError):
    """An argument lies outside the domain of the operation."""


class TailUnspecifiedError(DomainError):
    """A truncated sequence was asked for an index beyond its declared depth."""


class RectangleNotInClassError(DomainError):
    """The side-length product of a rectangle does not exist (it oscillates)."""


class DepthError(DomainError):
    """Membership cannot be decided at the configured depth."""


class BudgetExceededError(InfMeasureError, RuntimeError):
    """A point or cell count would exceed the configured budget."""


class NoConvergenceError(InfMeasureError, ArithmeticError):
    """A limit schedule was exhausted before the Cauchy criterion held.

    ``partial`` carries whatever estimates were produced before giving up.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
