"""Exception hierarchy shared by all modules."""


class DtmError(Exception):
    """Base class for every error raised by this package."""


class MalformedHeader(DtmError):
    pass


class DimensionMismatch(DtmError, ValueError):
    pass


class ShapeMismatch(DtmError, ValueError):
    pass


class NodataPresent(DtmError):
    pass


class NonFiniteValue(DtmError, ValueError):
    pass


class IoFailure(DtmError, OSError):
    pass


class SingularSystem(DtmError):
    pass


class NotSquare(DtmError, ValueError):
    pass


class FactorizationFailed(DtmError):
    pass


class NonFiniteEncountered(DtmError, FloatingPointError):
    pass


class FeatureOutOfBounds(DtmError, ValueError):
    pass


class SpecParseError(DtmError, ValueError):
    pass


class EmptyInput(DtmError, ValueError):
    pass


class MalformedData(DtmError, ValueError):
    pass
