"""Exception hierarchy shared by all modules."""


class MbootError(Exception):
    """Base class for every error raised by this package."""


class InvalidSubsampleSize(MbootError, ValueError):
    pass


class EmptyDistribution(MbootError, ValueError):
    pass


class InsufficientReplicates(MbootError, ValueError):
    pass


class DegenerateDesign(MbootError, ValueError):
    """Raised when a regression design has no spread in x."""


class DomainError(MbootError, ValueError):
    pass


class NonpositiveRate(MbootError, ValueError):
    pass


class DimensionError(MbootError, ValueError):
    pass


class InsufficientData(MbootError, ValueError):
    pass


class InsufficientGrid(MbootError, ValueError):
    """Too few usable candidate subsample sizes survived gridding."""


class DegenerateStatistic(MbootError, ValueError):
    """Every bootstrap dispersion was zero, so no rate can be fitted."""


class StatisticError(MbootError, RuntimeError):
    """The statistic failed (raised or returned a non-finite value) on a replicate."""

    def __init__(self, replicate, message):
        self.replicate = replicate
        super().__init__(f"statistic failed on replicate {replicate}: {message}")


class DataFormatError(MbootError, ValueError):
    """A data file could not be parsed; ``line`` is the 1-based line number."""

    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")
