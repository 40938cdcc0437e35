"""Exception hierarchy used throughout :mod:`curvedenoise`."""


class CurveDenoiseError(Exception):
    """Base class for all package errors."""


class InvalidIntervalError(CurveDenoiseError, ValueError):
    pass


class InvalidSizeError(CurveDenoiseError, ValueError):
    pass


class GridMismatchError(CurveDenoiseError, ValueError):
    pass


class NonOrthonormalBasisError(CurveDenoiseError, ValueError):
    pass


class EmptySeriesError(CurveDenoiseError, ValueError):
    pass


class SeriesTooShortError(CurveDenoiseError, ValueError):
    pass


class AllZeroCoefficientsError(CurveDenoiseError, ValueError):
    pass


class AsymmetricKernelError(CurveDenoiseError, ValueError):
    pass


class DimensionMismatchError(CurveDenoiseError, ValueError):
    pass


class SingularMatrixError(CurveDenoiseError, ValueError):
    """A matrix that must be inverted is (numerically) singular.

    Parameters
    ----------
    message : str
        Human readable diagnostic.
    name : str, optional
        Which matrix failed, e.g. ``"lag 2"`` or ``"omega_perp"``.
    condition : float, optional
        The offending condition number.
    """

    def __init__(self, message, name=None, condition=None):
        super().__init__(message)
        self.name = name
        self.condition = condition


class NoPositiveEigenvaluesError(CurveDenoiseError, ValueError):
    pass


class NonStationaryModelError(CurveDenoiseError, ValueError):
    pass


class RetryLimitExceededError(CurveDenoiseError, RuntimeError):
    pass


class RankDeficientError(CurveDenoiseError, ValueError):
    pass


class InsufficientHistoryError(CurveDenoiseError, ValueError):
    pass


class InvalidConfigError(CurveDenoiseError, ValueError):
    pass


class ZeroVarianceError(CurveDenoiseError, ValueError):
    pass


class CsvFormatError(CurveDenoiseError, ValueError):
    """Malformed curve CSV input.

    ``kind`` is one of ``"parse-error"``, ``"missing-cell"``,
    ``"duplicate-key"`` or ``"non-monotone-dates"``.
    """

    def __init__(self, message, kind, line=None, date=None):
        super().__init__(message)
        self.kind = kind
        self.line = line
        self.date = date
