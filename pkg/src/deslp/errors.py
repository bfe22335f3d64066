"""Exception types shared across the package."""


class DeslpError(Exception):
    """Base class for all package-specific errors."""


class InvalidTableError(DeslpError):
    """A lookup table is malformed or does not fit its input block."""


class NotDefiniteError(DeslpError):
    """An operation requiring a definite (negation-free) program got one with negation."""


class TooManyAtomsError(DeslpError):
    """Brute-force enumeration was asked to cover more atoms than its cap allows."""


class TableNodeError(DeslpError):
    """A truth-table expression reached a stage that requires it to be expanded first."""


class TightnessError(DeslpError):
    """A program with a positive dependency cycle was given to a component requiring tightness."""

    def __init__(self, message, cycle=None):
        super().__init__(message)
        self.cycle = cycle or []


class ResourceLimitError(DeslpError):
    """A configured branch or time cap was exceeded during search.

    `stats` carries the search counters up to the point the cap fired,
    so callers can record how far an aborted run got.
    """

    def __init__(self, message: str, stats=None):
        super().__init__(message)
        self.stats = stats


class InconsistentInstanceError(DeslpError):
    """Simplification or propagation derived a contradiction from the instance data."""
