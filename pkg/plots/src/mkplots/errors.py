"""Error types for the plotting package."""


class PlotsError(Exception):
    """Base class for plotting failures."""


class MissingColumn(PlotsError):
    """An input CSV lacks a column the renderer needs."""


class EmptyGroup(PlotsError):
    """A referenced (point, n) group has no replicate rows."""
