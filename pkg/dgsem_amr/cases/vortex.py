"""Isentropic vortex advected through a periodic warped checkerboard mesh."""

from functools import partial

import numpy as np

from ..mesh.geometry import vortex_warp
from ..numerics.euler import DEFAULT_GAS, GasModel, to_conservative
from .base import CaseSetup

VORTEX_LENGTH = 20.0
VORTEX_STRENGTH = 5.0
FREESTREAM_U = 1.0
FREESTREAM_V = 1.0
WARP_AMPLITUDE = 0.05


def vortex_exact(
    x: np.ndarray,
    y: np.ndarray,
    t: float,
    gas: GasModel = DEFAULT_GAS,
    strength: float = VORTEX_STRENGTH,
    u_inf: float = FREESTREAM_U,
    v_inf: float = FREESTREAM_V,
    length: float = VORTEX_LENGTH,
) -> np.ndarray:
    """Conserved states of the exact vortex at time ``t``.

    The vortex centre starts at the origin and moves with ``(u_inf, v_inf)``;
    positions are wrapped to the nearest periodic image.
    """
    half = 0.5 * length
    xr = np.mod(np.asarray(x, dtype=float) - u_inf * t + half, length) - half
    yr = np.mod(np.asarray(y, dtype=float) - v_inf * t + half, length) - half
    r2 = xr * xr + yr * yr
    g = gas.gamma
    bump = np.exp(0.5 * (1.0 - r2))
    u = u_inf - strength / (2.0 * np.pi) * yr * bump
    v = v_inf + strength / (2.0 * np.pi) * xr * bump
    T = 1.0 - (g - 1.0) * strength**2 / (8.0 * g * np.pi**2) * np.exp(1.0 - r2)
    rho = T ** (1.0 / (g - 1.0))
    p = T ** (g / (g - 1.0))
    return to_conservative(rho, u, v, p, gas)


def vortex_case(gas: GasModel = DEFAULT_GAS) -> CaseSetup:
    half = 0.5 * VORTEX_LENGTH
    exact = partial(vortex_exact, gas=gas)
    return CaseSetup(
        name="vortex",
        bounds=(-half, half, -half, half),
        periodic=(True, True),
        initial_condition=lambda x, y: exact(x, y, 0.0),
        exact=exact,
        warp=vortex_warp(VORTEX_LENGTH, WARP_AMPLITUDE),
        checkerboard=True,
    )
