"""Exception hierarchy.

Truncation artifacts and model bugs are kept apart on purpose: a
``TruncationError`` means the finite window was too small for the query,
anything else means a construction broke an axiom.
"""


class ThreeTreesError(Exception):
    """Base class for every error raised by the package."""


class TreeStructureError(ThreeTreesError, ValueError):
    """An edge list is not a tree (cycle, disconnection, bad ids or weights)."""

    def __init__(self, message, cycle=None):
        super().__init__(message)
        self.cycle = cycle


class UnknownVertexError(ThreeTreesError, KeyError):
    pass


class LineError(ThreeTreesError, ValueError):
    """A tree line is not an injective geodesic parametrization."""


class PieceError(ThreeTreesError, ValueError):
    pass


class MissingLineError(PieceError):
    """A Bass-Serre edge has no boundary line in one of its endpoint pieces."""


class IdentificationError(ThreeTreesError):
    """Flip identifications resolved inconsistently (generator bug)."""


class OutOfWindowError(ThreeTreesError):
    """A flip image falls outside the neighbouring piece's window."""


class TruncationError(ThreeTreesError):
    """The query needs coordinates outside the truncated model."""


class UnreachableError(TruncationError):
    """No path between two vertices of the truncated complex."""


class QuotientCycleError(TreeStructureError):
    """Gluing produced a cycle; the quotient is not a tree."""


class PathConstructionError(ThreeTreesError):
    """Chaining of special-path segments failed (contradicts convexity)."""


class ConfigError(ThreeTreesError, ValueError):
    pass
