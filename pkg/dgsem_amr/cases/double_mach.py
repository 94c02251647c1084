"""Double Mach reflection of a Mach 10 shock on a 30 degree wedge."""

import numpy as np

from ..numerics.boundary import Dirichlet, Inflow, Outflow, ReflectiveWall, Split
from ..numerics.euler import DEFAULT_GAS, GasModel, to_conservative
from .base import CaseSetup

SHOCK_ORIGIN = 1.0 / 6.0
SHOCK_SPEED = 10.0
ANGLE = np.pi / 6.0


def post_shock_state(gas: GasModel = DEFAULT_GAS) -> np.ndarray:
    return to_conservative(8.0, 8.25 * np.cos(ANGLE), -8.25 * np.sin(ANGLE), 116.5, gas)


def pre_shock_state(gas: GasModel = DEFAULT_GAS) -> np.ndarray:
    return to_conservative(1.4, 0.0, 0.0, 1.0, gas)


def shock_position(y: np.ndarray, t: float) -> np.ndarray:
    """x-coordinate of the incident shock at height ``y`` and time ``t``."""
    y = np.asarray(y, dtype=float)
    return SHOCK_ORIGIN + (y + 2.0 * SHOCK_SPEED * t) / np.sqrt(3.0)


def _shock_field(x: np.ndarray, y: np.ndarray, t: float, gas: GasModel) -> np.ndarray:
    behind = np.asarray(x) < shock_position(y, t)
    return np.where(behind[..., None], post_shock_state(gas), pre_shock_state(gas))


def double_mach_case(gas: GasModel = DEFAULT_GAS) -> CaseSetup:
    post = post_shock_state(gas)
    return CaseSetup(
        name="dmr",
        bounds=(0.0, 4.0, 0.0, 1.0),
        periodic=(False, False),
        initial_condition=lambda x, y: _shock_field(x, y, 0.0, gas),
        boundary_conditions={
            "left": Inflow(post),
            "right": Outflow(),
            "bottom": Split(
                lambda x, y: x < SHOCK_ORIGIN, Inflow(post), ReflectiveWall()
            ),
            "top": Dirichlet(lambda x, y, t: _shock_field(x, y, t, gas)),
        },
    )
