"""Exception taxonomy shared across the package."""


class SizeError(ValueError):
    """System size or vector length out of the supported range."""


class OperatorError(ValueError):
    """Malformed operator: non-Hermitian, out-of-range sites, duplicate sites."""


class MatrixError(ValueError):
    """Matrix input violates a required structure (Hermiticity, unitarity)."""


class CapacityError(ValueError):
    """Request exceeds a dense-computation feasibility ceiling."""


class StatisticsError(ValueError):
    """Too little data to compute the requested statistic."""


class NumericError(RuntimeError):
    """Numerical breakdown (NaN/Inf) during optimization.

    Carries the partial training record accumulated before the abort.
    """

    def __init__(self, message, partial_record=None):
        super().__init__(message)
        self.partial_record = partial_record


class ManifestError(ValueError):
    """Invalid run manifest; message is anchored to the offending location."""
