"""Exception hierarchy.

Each error family maps onto one CLI exit code: ``ConfigError`` -> 2,
``DomainError`` -> 3, ``DatasetIOError`` -> 4.
"""


class HGModesError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(HGModesError, ValueError):
    """Invalid configuration or usage."""


class DomainError(HGModesError, ValueError):
    """A physically or numerically infeasible request."""


class UnsupportedOrder(DomainError):
    pass


class ZeroPower(DomainError):
    pass


class InfeasibleBounds(DomainError):
    pass


class GeometryMismatch(DomainError):
    pass


class WindowOutOfBounds(DomainError):
    pass


class ZeroVariance(DomainError):
    pass


class ShapeMismatch(HGModesError, ValueError):
    pass


class BatchTooSmall(HGModesError, ValueError):
    pass


class LabelOutOfRange(HGModesError, ValueError):
    pass


class CropTooLarge(HGModesError, ValueError):
    pass


class ClassSetMismatch(ConfigError):
    pass


class DatasetIOError(HGModesError, OSError):
    """File system failure, always carrying the offending path."""

    def __init__(self, path, reason):
        super().__init__(f"{path}: {reason}")
        self.path = str(path)
        self.reason = reason
