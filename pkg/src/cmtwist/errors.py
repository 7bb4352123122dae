"""Exception taxonomy shared by all cmtwist modules."""


class CmtwistError(Exception):
    """Base class for every error raised by this package."""


class PrecisionLoss(CmtwistError):
    """Recompute-and-compare disagreement exceeded the guard bound."""


class AgmBranchFailure(CmtwistError):
    """Complex AGM failed to converge within the iteration budget."""


class NonCyclicClassGroup(CmtwistError):
    """No single ideal class generates the class group."""


class NotPrincipal(CmtwistError):
    """Ideal has no generator (shortest vector norm exceeds the ideal norm)."""


class RamifiedAtConductor(CmtwistError):
    """Ideal shares a factor with the character conductor."""


class NotCoprime(CmtwistError):
    """Arguments violate a coprimality precondition."""


class PoleAtLatticePoint(CmtwistError):
    """Evaluation point lies on the lattice."""


class SingularSolve(CmtwistError):
    """Degenerate linear system (basis not R-independent)."""


class InconsistentFunctionalEquation(CmtwistError):
    """Validation smoothing parameter rejected the solved (L, w) pair."""


class RoundingMarginExceeded(CmtwistError):
    """Integer rounding margin too small; raise the working precision."""


class NotHomotheticToOK(CmtwistError):
    """Period lattice does not fit c*O_K within tolerance."""


class UnsupportedQ(CmtwistError):
    """No builtin data for this q."""


class NotASquare(CmtwistError):
    """Argument is not a square in Z_2."""


class PrecisionExhausted(CmtwistError):
    """2-adic valuation cannot be separated from the error of the input."""


class RecognitionFailed(CmtwistError):
    """No algebraic element within the denominator bound fits the value."""


class NoRelationFound(CmtwistError):
    """Integer relation search produced no certified polynomial."""


class NotInFamily(CmtwistError):
    """Twist parameter violates a family condition (the message names it)."""


class CheckFailed(CmtwistError):
    """A verification assertion failed; carries the assembled report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
