"""Exact-arithmetic engine for running the minimal model program on toric
fans and rational surface lattices.

All scalar arithmetic is `fractions.Fraction`; no module ever constructs a
floating-point value.
"""

from .linalg import (
    RationalMatrix,
    NoSolutionError,
    UnderdeterminedError,
    is_negative_definite,
    primitivize,
    solve_linear,
)
from .polytope import RationalPolytope

__all__ = [
    "RationalMatrix",
    "RationalPolytope",
    "NoSolutionError",
    "UnderdeterminedError",
    "is_negative_definite",
    "primitivize",
    "solve_linear",
]

__version__ = "0.1.0"
