"""Figure rendering for srlinksim metric CSVs."""

__version__ = "0.1.0"

from .render import MissingSeries, render
from .specs import SPECS, FigureSpec
