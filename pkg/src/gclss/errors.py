"""Exception hierarchy shared across the package.

Every library-raised error derives from :class:`GclssError` so callers (and
the CLI) can distinguish computation failures from programming mistakes.
"""


class GclssError(Exception):
    """Base class for all errors raised by this package."""


class SymmetryViolation(GclssError):
    """Input matrix is not symmetric within tolerance."""


class ConvergenceFailure(GclssError):
    """Iterative eigensolver did not converge within its sweep budget."""


class DisconnectedGraph(GclssError):
    """Laplacian has multiple (near-)zero eigenvalues; the similarity graph
    has more than one connected component and seriation is undefined."""


class DegenerateFiedler(GclssError):
    """The smallest non-zero Laplacian eigenvalue is (numerically) repeated,
    so the corresponding eigenvector is not unique."""


class DegenerateSpectrum(GclssError):
    """Repeated eigenvalues where a simple spectrum is required."""


class ZeroVarianceLabels(GclssError):
    """All anchor labels are equal; no orientation can be derived."""


class SingularUnlabeledBlock(GclssError):
    """The unlabeled diagonal block of the mixed Laplacian is singular."""


class InvalidStep(GclssError):
    """Non-positive step parameter passed to the ranking loss."""


class InsufficientObservations(GclssError):
    """Fewer than two observations supplied for a variance estimate."""


class ZeroNormFeature(GclssError):
    """A feature vector has (numerically) zero norm and cannot be normalized."""


class InvalidBudget(GclssError):
    """Selection budget outside [1, n]."""


class TooLarge(GclssError):
    """Exhaustive enumeration would exceed the configured subset budget."""


class BatchTooSmall(GclssError):
    """Contrastive losses need at least three samples per batch."""


class KernelNotPD(GclssError):
    """Covariance kernel is not positive definite even after jitter escalation."""


class InvalidFraction(GclssError):
    """Dataset split fraction or counts leave some split empty."""


class UndefinedR2(GclssError):
    """Coefficient of determination undefined (zero label variance)."""


class DataNotFound(GclssError):
    """Expected dataset files are missing on disk."""


class TrainingDiverged(GclssError):
    """Training loss became non-finite; carries the aborting step index."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step
