"""Exception types raised across the package."""


class VranError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(VranError, ValueError):
    pass


class ShapeMismatch(VranError, ValueError):
    pass


class MissingGeometry(VranError, ValueError):
    """An edge has neither an explicit length nor endpoint coordinates."""


class NegativeCoefficient(VranError, ValueError):
    pass


class InvalidTopology(VranError, ValueError):
    pass


class GenerationFailed(VranError, RuntimeError):
    pass


class Unreachable(VranError, RuntimeError):
    pass


class ParseError(VranError, ValueError):
    """Malformed input document; carries the offending line and/or field."""

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class Infeasible(VranError, RuntimeError):
    """No split assignment satisfies the capacity and delay constraints."""


class TooLarge(VranError, ValueError):
    pass


class GraphConsumed(VranError, RuntimeError):
    """backward() was already run on this graph."""


class NonFiniteLoss(VranError, FloatingPointError):
    def __init__(self, message, dump=None):
        super().__init__(message)
        self.dump = dump


class NegativeGap(VranError, ValueError):
    """Candidate cost below the reference optimum: the reference is not optimal."""


class MissingCheckpoint(VranError, FileNotFoundError):
    pass


class CheckpointFormatError(VranError, ValueError):
    pass


class SearchTimeout(VranError, TimeoutError):
    """Time budget exhausted before any feasible assignment was found."""
