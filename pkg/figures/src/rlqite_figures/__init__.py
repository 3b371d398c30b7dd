"""Read-only plotting for the simulator CLI's CSV tables.

This package computes no physics quantities; every number it draws comes
from a CSV produced by the `rlqite` command line.
"""

from .render import KINDS, PlotJob, render
from .schema import SchemaError, Table, load_table

__all__ = ["KINDS", "PlotJob", "render", "SchemaError", "Table", "load_table"]
