"""Exception hierarchy shared by all qdelay modules."""


class QDelayError(Exception):
    """Base class for every error raised by qdelay."""


class ValidationError(QDelayError, ValueError):
    """Parameters violate a physical or structural invariant."""


class DomainError(QDelayError, ValueError):
    """Operation evaluated outside the region where its model is valid."""


class NoSolutionError(QDelayError):
    pass


class SingularError(QDelayError):
    """Group delay undefined (coherent reflection vanishes)."""


class InsufficientSamplesError(QDelayError, ValueError):
    pass


class CoarseGridError(QDelayError, ValueError):
    pass


class BadGridError(QDelayError, ValueError):
    pass


class LengthMismatchError(QDelayError, ValueError):
    pass


class ToleranceNotMetError(QDelayError):
    pass


class InvalidStateError(QDelayError):
    pass


class FitDivergedError(QDelayError):
    pass


class DegenerateError(QDelayError):
    pass


class NotConvergedError(QDelayError):
    pass


class UnderdeterminedError(QDelayError):
    pass


class ConfigError(QDelayError):
    """Malformed configuration or input file."""
