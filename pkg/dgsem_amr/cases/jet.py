"""High Mach number jet entering a low-pressure ambient gas.

The jet enters through the lower boundary ``y = 0`` along ``+y``; the
symmetry line is the left boundary ``x = 0``.
"""

import numpy as np

from ..numerics.boundary import Inflow, Outflow, ReflectiveWall, Split
from ..numerics.euler import DEFAULT_GAS, GasModel, to_conservative
from .base import CaseSetup

JET_HALF_WIDTH = 0.05
AMBIENT_PRIMITIVE = (0.5, 0.0, 0.0, 1e-2)
JET_PRIMITIVE = (5.0, 0.0, 800.0, 0.4127)


def jet_case(gas: GasModel = DEFAULT_GAS) -> CaseSetup:
    ambient = to_conservative(*AMBIENT_PRIMITIVE, gas=gas)
    jet = to_conservative(*JET_PRIMITIVE, gas=gas)
    return CaseSetup(
        name="jet",
        bounds=(0.0, 0.5, 0.0, 1.0),
        periodic=(False, False),
        initial_condition=lambda x, y: np.broadcast_to(
            ambient, np.shape(x) + (4,)
        ).copy(),
        boundary_conditions={
            "bottom": Split(
                lambda x, y: x < JET_HALF_WIDTH, Inflow(jet), Inflow(ambient)
            ),
            "left": ReflectiveWall(),
            "right": Outflow(),
            "top": Outflow(),
        },
    )
