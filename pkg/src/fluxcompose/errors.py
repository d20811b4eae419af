"""Shared error types.

Position-carrying errors render as ``name:line:col: message`` so the CLI can
print file context uniformly.
"""

from __future__ import annotations


class FluxError(Exception):
    """Base class for every domain-level failure raised by this package."""


class ParseError(FluxError):
    """Syntax error in any of the textual input formats.

    Positions are 1-based and point into the source text.
    """

    def __init__(self, line: int, column: int, expected: str, found: str,
                 source_name: str = "<string>"):
        self.line = line
        self.column = column
        self.expected = expected
        self.found = found
        self.source_name = source_name
        super().__init__(
            f"{source_name}:{line}:{column}: expected {expected}, found {found}"
        )
