"""Shared exception types."""


class FormatError(ValueError):
    """A binary or text artifact does not match its documented layout."""
