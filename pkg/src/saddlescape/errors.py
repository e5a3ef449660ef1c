"""Exception types shared across the package."""


class SaddleSearchError(Exception):
    """Base class for package-specific errors."""


class DegenerateInput(SaddleSearchError):
    """Input vectors are (numerically) linearly dependent."""


class ConvergenceFailure(SaddleSearchError):
    """An iterative solver exceeded its sweep/iteration limit."""


class SimulationFailure(SaddleSearchError):
    """A simulation-backed force evaluation produced non-finite values."""


class FactorizationFailure(SaddleSearchError):
    """Kernel matrix could not be factorized even after jitter escalation."""


class FitFailure(SaddleSearchError):
    """No hyperparameter start produced a finite marginal likelihood."""


class Diverged(SaddleSearchError):
    """The search state left the admissible domain.

    Carries the partial run result (when available) in ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ConfigError(SaddleSearchError):
    """Invalid run configuration; message names the offending key."""


class DegenerateSpectrum(UserWarning):
    """Eigenvalue gap at the requested cut is below resolution."""
