"""Exception hierarchy shared across the package.

Two families matter for the command-line harness: validation failures
(bad inputs, violated preconditions) and numerical degeneracies discovered
mid-computation (zero evidence, vanishing normalizations).  The CLI maps
them to exit codes 2 and 3 respectively.
"""


class ValidationError(ValueError):
    """Input or configuration violates a documented precondition."""


class OutOfLatticeError(ValidationError):
    """An observable carries a frequency index outside the working lattice."""


class DegeneracyError(RuntimeError):
    """A numerically degenerate quantity was encountered mid-computation."""


class ZeroEvidenceError(DegeneracyError):
    """Conditioning on an observation with (numerically) zero evidence."""


class DegenerateNormalizationError(DegeneracyError):
    """A normalizing denominator fell below its safe threshold."""


class RankDeficiencyError(DegeneracyError):
    """Too little data to resolve the requested basis.

    Carries ``deficiency``, the number of basis directions that cannot be
    estimated from the available samples.
    """

    def __init__(self, message: str, deficiency: int):
        super().__init__(message)
        self.deficiency = deficiency


class NotAffineError(DegeneracyError):
    """A frequency vector is not affine in the qubit bits.

    Raised when Walsh coefficients of weight >= 2 (or the constant term)
    fail to vanish, i.e. the index set breaks the one-coefficient-per-qubit
    structure of the diagonal evolution.
    """
