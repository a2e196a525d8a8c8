"""Newton maps, their channel diagrams and Newton graphs."""

from .complex_poly import (
    INF,
    Polynomial,
    RationalMap,
    RootSpec,
    newton_map,
    newton_map_from_roots,
)
from .errors import NewtonGraphError

__all__ = [
    "INF",
    "NewtonGraphError",
    "Polynomial",
    "RationalMap",
    "RootSpec",
    "newton_map",
    "newton_map_from_roots",
]
