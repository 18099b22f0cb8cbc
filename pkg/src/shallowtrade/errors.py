"""Exception hierarchy shared by every stage of the pipeline."""


class ShallowTradeError(Exception):
    """Base class for all package errors."""


# -- ingestion / windowing ---------------------------------------------------

class DataError(ShallowTradeError, ValueError):
    """A ticker's data cannot be used. Trials turn these into skip records."""


class MalformedCsv(DataError):
    pass


class EmptySeries(DataError):
    pass


class NonPositivePrice(DataError):
    pass


class SeriesTooShort(DataError):
    pass


class TooFewExamples(DataError):
    pass


# -- network -----------------------------------------------------------------

class ZeroDimension(ShallowTradeError, ValueError):
    pass


class DimensionMismatch(ShallowTradeError, ValueError):
    pass


class EmptyTrainSet(ShallowTradeError, ValueError):
    pass


# -- trials / stats ----------------------------------------------------------

class MixedArms(ShallowTradeError, ValueError):
    pass


class EmptyOutcomes(ShallowTradeError, ValueError):
    pass


class LengthMismatch(ShallowTradeError, ValueError):
    pass


class NonPositiveExpected(ShallowTradeError, ValueError):
    pass


class UnsupportedSignificanceLevel(ShallowTradeError, ValueError):
    pass


# -- operator surface --------------------------------------------------------

class ConfigInvalid(ShallowTradeError, ValueError):
    pass


class IoFailure(ShallowTradeError, OSError):
    pass
