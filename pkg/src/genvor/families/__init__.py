from .mult_offset import MultOffsetFamily
from .scaling2d import Scaling2DFamily, fat_check, FatBodyError
from .nearest_furthest import NearestFurthestFamily

__all__ = [
    "MultOffsetFamily",
    "Scaling2DFamily",
    "NearestFurthestFamily",
    "fat_check",
    "FatBodyError",
]
