"""Exception types shared across the library."""


class VesboError(Exception):
    """Base class for all library errors."""


class SingularDataError(VesboError):
    """Kernel matrix could not be factorized even at maximum jitter.

    Usually signals duplicate or near-duplicate training points, which the
    noise-free model cannot interpolate.
    """


class GridDegeneracyError(VesboError):
    """Posterior covariance over a sampling grid failed to factorize."""


class BracketError(VesboError):
    """No sign change found over a root bracket after automatic expansion."""


class InconsistentMomentsError(VesboError):
    """Sample moments violate Jensen's inequality beyond rounding tolerance.

    log(mean(g)) - mean(log(g)) must be >= 0 for any sample set; a clearly
    negative value indicates a bug in the moment computation upstream.
    """


class InvalidFStarError(VesboError):
    """An observed value exceeded the objective's declared maximum."""


class ConfigError(VesboError):
    """An experiment or CLI configuration field failed validation."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
