"""Exception types shared across the package.

Everything user-facing derives from ValueError or RuntimeError so callers can
catch broadly; the subclasses exist so tests and the CLI can tell failure
modes apart.
"""


class ConfigurationError(ValueError):
    """A parameter combination is invalid before any data is touched."""


class DataError(ValueError):
    """Input data is malformed: wrong dimension, non-finite, bad cell."""


class InsufficientTrainingError(DataError):
    """The training sample is too short for the requested estimate."""


class DependenceTooStrongError(RuntimeError):
    """No dependence order up to the allowed maximum meets the cutoff."""


class DegenerateVarianceError(RuntimeError):
    """The null-variance estimate is not positive; data is degenerate."""


class DetectorFinishedError(RuntimeError):
    """step() was called on a detector that has already alarmed."""


class CalibrationInfeasibleError(ConfigurationError):
    """No threshold in the search bracket attains the requested run length."""
