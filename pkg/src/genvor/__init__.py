"""Approximate minimization diagrams and generalized proximity search."""

from .family import DistanceFamily, Sketch, sep_point, sep_sets
from .families import MultOffsetFamily, NearestFurthestFamily, Scaling2DFamily
from .search import Avd, SearchTree, build, flatten, query

__all__ = [
    "DistanceFamily",
    "Sketch",
    "sep_point",
    "sep_sets",
    "MultOffsetFamily",
    "Scaling2DFamily",
    "NearestFurthestFamily",
    "SearchTree",
    "Avd",
    "build",
    "flatten",
    "query",
]
