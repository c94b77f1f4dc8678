"""Exception hierarchy shared by all simulation layers."""


class SyncError(Exception):
    """Base class for every error raised by :mod:`unisync`."""


class NonFiniteState(SyncError):
    """An integration step produced NaN or Inf."""


class StepUnderflow(SyncError):
    """The adaptive controller asked for a step below the underflow floor."""


class OutOfDomain(SyncError, ValueError):
    """A trajectory was queried outside its time span."""


class NotSymmetric(SyncError, ValueError):
    pass


class NoConvergence(SyncError):
    """Newton shooting did not converge (or the cycle is not isolated)."""


class TransientEscape(SyncError):
    """The burn-in trajectory left the configured bounding box."""


class DegenerateMultiplier(SyncError):
    """The Floquet multiplier 1 is not simple."""


class PeriodMismatch(SyncError, ValueError):
    pass


class NonUniqueMin(SyncError):
    """The phase-distance functional has several equally deep minima."""


class GainTooSmall(SyncError):
    """The static gains do not dominate the certified drift bound."""


class DomainExceeded(SyncError):
    """A slave trajectory left the inflated initial box."""


class SingularB(SyncError, ValueError):
    pass


class InvalidController(SyncError, ValueError):
    """Controller parameters violate their structural invariants."""


class ConfigError(SyncError, ValueError):
    """A scenario file is malformed or references unknown entities."""
