"""Exception hierarchy."""


class TomographyError(Exception):
    """Base class for errors raised by this package."""


class DimensionPolicyError(TomographyError, ValueError):
    pass


class NonHermitianError(TomographyError, ValueError):
    pass


class PlanError(TomographyError, ValueError):
    """Empty or malformed measurement plan."""


class ProbabilityError(TomographyError):
    """A computed probability fell outside [0, 1] by more than rounding."""


class DataModelMismatch(TomographyError):
    """Observed counts at a setting the model assigns zero probability."""


class GridTooCoarse(TomographyError):
    pass
