"""Reference operators, Euler physics and boundary conditions.

The mesh-dependent kernels live in ``dgsem``, ``limiters`` and
``timestepping`` and are imported from their modules directly.
"""

from .boundary import (
    BoundaryCondition,
    Dirichlet,
    Inflow,
    Outflow,
    Periodic,
    ReflectiveWall,
    Split,
)
from .euler import DEFAULT_GAS, GasModel
from .reference_ops import ReferenceOperators, get_operators, lgl_rule

__all__ = [
    "BoundaryCondition",
    "DEFAULT_GAS",
    "Dirichlet",
    "GasModel",
    "Inflow",
    "Outflow",
    "Periodic",
    "ReferenceOperators",
    "ReflectiveWall",
    "Split",
    "get_operators",
    "lgl_rule",
]
