"""Exception types shared across the package."""


class NetAmpError(Exception):
    """Base class for package errors."""


class InconsistentObservation(NetAmpError):
    """Exact conditioning left no atom with positive posterior weight."""


class DegenerateChannel(NetAmpError):
    """Operation undefined for a zero-noise (exact-conditioning) channel."""


class DimensionMismatch(NetAmpError):
    """Array shapes inconsistent with the model dimensions."""


class DivergedIteration(NetAmpError):
    """An iterative scheme produced NaN/Inf iterates."""
