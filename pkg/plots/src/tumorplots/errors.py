"""Exception hierarchy for artifact rendering."""
from __future__ import annotations


class PlotsError(Exception):
    """Base class for all package-specific failures."""


class SchemaMismatch(PlotsError):
    """An artifact file is missing required columns, files, or data rows.

    `missing` carries the column names (or file patterns) that were not
    found, so callers can report exactly what the artifact lacked.
    """

    def __init__(self, message: str, missing: tuple[str, ...] = ()):
        super().__init__(message)
        self.missing = missing
