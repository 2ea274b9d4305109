"""Generalized continued fractions over imaginary quadratic orders."""

from .cfrac import Coefficient, Expansion, GreedyQuality, FirstFound, Scripted, expand
from .covering import AdmissibleParams, check_admissible, find_minimal_admissible_set
from .numerics import QuadComplex, QuadReal, parse_complex
from .ring_ideals import Elem, Ring

__version__ = "0.1.0"

__all__ = [
    "AdmissibleParams",
    "Coefficient",
    "Elem",
    "Expansion",
    "FirstFound",
    "GreedyQuality",
    "QuadComplex",
    "QuadReal",
    "Ring",
    "Scripted",
    "check_admissible",
    "expand",
    "find_minimal_admissible_set",
    "parse_complex",
]
