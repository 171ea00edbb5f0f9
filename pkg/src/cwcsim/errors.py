"""Shared exception types."""


class CwcError(Exception):
    """Base class for all errors raised by this package."""


class InvalidPathError(CwcError):
    """A path does not address a compartment occurrence in the given term."""
