"""Exception hierarchy shared across the package."""

from __future__ import annotations


class TSwitchError(Exception):
    """Base class for all package errors."""


class ValidationError(TSwitchError):
    """A network or configuration violates a structural invariant."""


class SingularTopology(TSwitchError):
    """The closed-line graph is disconnected, so the reduced admittance is singular.

    ``components`` holds the bus partition (lists of bus ids) when known.
    """

    def __init__(self, message: str, components: list[list[int]] | None = None):
        super().__init__(message)
        self.components = components or []


class LineOpen(TSwitchError):
    """A sensitivity was requested for a line that is open in the topology."""


class BridgeLine(TSwitchError):
    """Opening the line would island part of the network (self-PTDF equals 1)."""


class InvalidCandidate(TSwitchError):
    """A non-switchable line was offered as a free switching candidate."""


class IterationLimit(TSwitchError):
    """The LP or branch-and-bound search ran out of its iteration budget."""


class NumericalFailure(TSwitchError):
    """The LP solver lost numerical stability."""


class OutOfRange(TSwitchError):
    """A current lies outside the knots of a breaker duty curve."""


class SchemaError(TSwitchError):
    """A case document does not match the schema; ``path`` locates the field."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class IntegrityError(TSwitchError):
    """A case document references an entity that does not exist or is duplicated."""
