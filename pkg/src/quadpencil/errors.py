"""Exception hierarchy shared by all quadpencil modules."""


class QuadpencilError(Exception):
    """Base class for all library errors."""


class NotPrime(QuadpencilError):
    pass


class ReducibleModulus(QuadpencilError):
    pass


class NotASquare(QuadpencilError):
    pass


class ZeroForm(QuadpencilError):
    pass


class ContextMismatch(QuadpencilError):
    pass


class DimensionMismatch(QuadpencilError):
    pass


class SingularTransform(QuadpencilError):
    pass


class SingularPoint(QuadpencilError):
    pass


class SearchExhausted(QuadpencilError):
    """A randomized search ran out of budget; the caller may raise the budget."""


class InsufficientPrecision(QuadpencilError):
    """The requested quantity is not determined at the working precision."""


class PreconditionViolated(QuadpencilError):
    pass


class ShapeViolation(QuadpencilError):
    pass


class NonIntegralResult(QuadpencilError):
    pass


class SquareDeterminant(QuadpencilError):
    pass


class GenerationExhausted(QuadpencilError):
    pass


class BudgetExceeded(QuadpencilError):
    pass


class HypothesisViolated(QuadpencilError):
    """A pipeline hypothesis failed on the given input.

    When the failure comes with a constructive non-minimality witness the
    transform pair is attached so the caller can apply it and retry.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ToleranceAmbiguous(QuadpencilError):
    """A floating-point eigenvalue landed within the zero tolerance."""
