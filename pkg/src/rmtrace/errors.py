"""Exception types raised across the package."""


class RMTraceError(ValueError):
    """Base class for invalid input to rmtrace routines."""


class DimensionError(RMTraceError):
    pass


class EmbeddingError(RMTraceError):
    pass


class InvalidStateError(RMTraceError):
    pass


class InsufficientDataError(RMTraceError):
    pass


class InsufficientShotsError(RMTraceError):
    pass


class DegenerateMomentError(RMTraceError):
    pass


class UnsupportedOrderError(RMTraceError):
    pass


class ConfigError(RMTraceError):
    pass
