"""Exception types shared across the package."""


class NonConvergenceError(RuntimeError):
    """Iterative eigenvalue/singular value solver exhausted its sweep budget."""


class PoleError(ValueError):
    """Evaluation point is too close to a pole (eigenvalue or kernel singularity)."""


class DegenerateSampleError(ValueError):
    """Sample set has zero variance, so normality diagnostics are undefined."""


class TruncationError(ValueError):
    """Truncation parameters produce a degenerate (zero-variance) entry law."""


class ConfigError(ValueError):
    """Experiment configuration failed validation."""


class ExperimentAbort(RuntimeError):
    """Too many per-trial solver failures to trust the aggregate."""
