"""Typed errors shared across the package."""

from __future__ import annotations


class NilgeomError(Exception):
    """Base class for every error raised by nilgeom."""


class GroupMismatchError(NilgeomError):
    """An element does not belong to the group it was used with."""


class ParseError(NilgeomError):
    """A text form (group, rectangle, scenario) could not be parsed."""


class BudgetExceeded(NilgeomError):
    """An enumeration would exceed the configured point budget."""

    def __init__(self, message: str, needed: int | None = None):
        super().__init__(message)
        self.needed = needed


class ShapeError(NilgeomError):
    """Rectangles or vectors of incompatible shape were combined."""


class ChartError(NilgeomError):
    """A chart could not be built or violates its invariants."""


class InjectivityError(NilgeomError):
    """A realized chart maps two distinct vectors to the same point."""

    def __init__(self, message: str, r=None, s=None, x=None):
        super().__init__(message)
        self.r, self.s, self.x = r, s, x


class FreenessError(NilgeomError):
    """Some g != 1 in a finite set fixes a point it should move."""

    def __init__(self, message: str, x=None, g=None):
        super().__init__(message)
        self.x, self.g = x, g


class HypothesisError(NilgeomError):
    """A verifier was called outside the parameter range it is valid for."""


class OrthoError(NilgeomError):
    """The orthogonalizer could not choose an admissible block radius."""

    def __init__(self, message: str, point=None, axis=None, forbidden=None):
        super().__init__(message)
        self.point, self.axis, self.forbidden = point, axis, forbidden


class ClauseError(NilgeomError):
    """A clause of the diagonal array failed its independent check."""

    def __init__(self, message: str, column=None, row=None, witness=None):
        super().__init__(message)
        self.column, self.row, self.witness = column, row, witness
