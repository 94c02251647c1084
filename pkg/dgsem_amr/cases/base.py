"""Case description shared by all benchmark setups."""

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from ..mesh.geometry import WarpFunction
from ..numerics.boundary import BoundaryCondition

# (x, y) -> conserved states
InitialCondition = Callable[[np.ndarray, np.ndarray], np.ndarray]
# (x, y, t) -> conserved states
ExactSolution = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


@dataclass
class CaseSetup:
    """Domain, data and boundary bindings of one benchmark."""

    name: str
    bounds: Tuple[float, float, float, float]
    periodic: Tuple[bool, bool]
    initial_condition: InitialCondition
    boundary_conditions: Dict[str, BoundaryCondition] = field(default_factory=dict)
    exact: Optional[ExactSolution] = None
    warp: Optional[WarpFunction] = None
    checkerboard: bool = False
