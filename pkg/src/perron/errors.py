"""Exception hierarchy.

Everything numerical raised on purpose by this package derives from
:class:`PerronError`, so callers (notably the CLI) can separate
computational failures from programming errors.
"""


class PerronError(Exception):
    """Base class for deliberate computational failures."""


class DimensionMismatchError(PerronError):
    """Operands live on measure spaces of different sizes."""


class InvalidCertificateError(PerronError):
    """A minorization certificate does not hold for the given kernel."""


class NotMinorizableError(PerronError):
    """A solve was attempted on a kernel without a usable certificate."""

    def __init__(self, details):
        super().__init__(str(details))
        self.details = details


class NearSingularError(PerronError):
    """1 - b[a] is too close to zero for a rank-one inversion."""


class PoleError(PerronError):
    def __init__(self, location):
        super().__init__(f"resolvent pole at lambda = {location!r}")
        self.location = location


class BelowSpectralRadiusError(PerronError):
    def __init__(self, lam, bound):
        super().__init__(
            f"lambda = {lam!r} is not above the spectral radius estimate {bound!r}"
        )
        self.lam = lam
        self.bound = bound


class IllConditionedError(PerronError):
    """A shifted linear system is too ill-conditioned to solve reliably."""


class AtEigenvalueError(PerronError):
    def __init__(self, lam, value):
        super().__init__(
            f"lambda = {lam!r} is numerically an eigenvalue (scalar function = {value!r})"
        )
        self.lam = lam
        self.value = value


class NotConvergentError(PerronError):
    """A Neumann-type series cannot converge (or did not within its cap)."""


class SlowConvergenceError(PerronError):
    """A geometric series has contraction ratio too close to one."""


class NoSignChangeError(PerronError):
    """Bracketing found no sign change for the scalar spectral function."""


class PowerIterationError(PerronError):
    """Power iteration failed to converge within its iteration budget."""


class EmptySupportError(PerronError):
    """A mollifier ball contains no quadrature node."""


class GridTooCoarseError(PerronError):
    """The quadrature grid cannot resolve the requested mollifier width."""
