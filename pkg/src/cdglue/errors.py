"""Shared exception base for the package.

Every domain error raised by the library derives from :class:`CdglueError`,
so callers (notably the CLI) can separate bad inputs from genuine bugs.
"""


class CdglueError(Exception):
    """Base class for all domain errors raised by cdglue."""


class InputFormatError(CdglueError):
    """An input file or mapping does not match the documented schema."""
