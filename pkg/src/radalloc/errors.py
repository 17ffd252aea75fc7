"""Exception taxonomy shared across the package.

Every error raised on a contract violation or numerical failure derives from
RadallocError so callers (notably the experiment harness) can catch one base
class, log the trial and move on.
"""


class RadallocError(Exception):
    """Base class for all package errors."""


class ZeroDistance(RadallocError):
    """A transmitter-target or target-receiver pair coincides."""


class SingularGeometry(RadallocError):
    """CRLB denominator vanished: the target is unlocalizable under this allocation."""

    def __init__(self, message: str, target_index: int | None = None):
        super().__init__(message)
        self.target_index = target_index


class NotSymmetric(RadallocError):
    """A matrix expected to be symmetric is not (beyond tolerance)."""


class InvalidPoint(RadallocError):
    """A linearization point has zero or negative entries."""


class Infeasible(RadallocError):
    """Phase-I certified the constraint set empty."""


class NumericalStall(RadallocError):
    """Barrier/Newton iteration stopped making progress.

    Carries a diagnostics dict (iteration counters, residuals) to make
    post-mortems possible without a debugger.
    """

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InfeasibleStart(RadallocError):
    """The uniform starting point is invalid (some target unlocalizable)."""


class DegenerateSolution(RadallocError):
    """A canonical solution collapsed (zero resource total)."""


class InfeasibleRelaxation(RadallocError):
    """Support enumeration found no valid KKT candidate."""


class RankDeficient(RadallocError):
    """Localization geometry does not pin down a 2-D position."""

    def __init__(self, message: str, target_index: int | None = None):
        super().__init__(message)
        self.target_index = target_index
