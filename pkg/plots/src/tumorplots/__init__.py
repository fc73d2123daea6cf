"""Render figures from tumorfront's CSV/JSON output files.

This package is display-only: it reads the artifact files a tumorfront run
leaves behind and draws them. It never recomputes any physics and does not
import tumorfront; the file formats are the entire contract between the two.
"""
from .errors import PlotsError, SchemaMismatch
from .figures import KINDS, render

__version__ = "0.1.0"

__all__ = ["KINDS", "PlotsError", "SchemaMismatch", "render", "__version__"]
