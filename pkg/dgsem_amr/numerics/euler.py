"""Pointwise ideal-gas Euler physics.

All functions take conserved states with a trailing axis of length 4
``(rho, rho*u, rho*v, E)`` and broadcast over any leading axes.
"""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from ..exceptions import InadmissibleStateError

ArrayLike = Union[np.ndarray, float]

# ln_mean switches to its series form below this squared relative difference
LN_MEAN_EPS = 1e-4


@dataclass(frozen=True)
class GasModel:
    """Calorically perfect gas."""

    gamma: float = 1.4

    def __post_init__(self) -> None:
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must be greater than 1, got {self.gamma}")


DEFAULT_GAS = GasModel()


@dataclass(frozen=True)
class EntropyData:
    """Mathematical entropy, entropy variables and entropy potential."""

    eta: np.ndarray
    vars: np.ndarray
    psi_x: np.ndarray
    psi_y: np.ndarray


def _as_state(U: ArrayLike) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    if U.shape[-1:] != (4,):
        raise ValueError(f"Conserved state must have trailing axis 4, got {U.shape}")
    return U


def _require_finite(U: np.ndarray) -> None:
    if not np.all(np.isfinite(U)):
        raise InadmissibleStateError("State contains non-finite entries")


def require_admissible(U: np.ndarray, gas: GasModel, where: str) -> None:
    """Raise InadmissibleStateError unless every state has rho > 0 and p > 0."""
    _require_finite(U)
    rho = U[..., 0]
    if np.any(rho <= 0.0):
        raise InadmissibleStateError(
            f"{where}: nonpositive density (min rho={rho.min():.6e})"
        )
    p = pressure(U, gas)
    if np.any(p <= 0.0):
        raise InadmissibleStateError(
            f"{where}: nonpositive pressure (min p={np.min(p):.6e})"
        )


def pressure(U: ArrayLike, gas: GasModel = DEFAULT_GAS) -> np.ndarray:
    """Return ``(gamma - 1)(E - |m|^2 / (2 rho))``.

    Raises:
        InadmissibleStateError: If any density is exactly zero.
    """
    U = _as_state(U)
    rho = U[..., 0]
    if np.any(rho == 0.0):
        raise InadmissibleStateError("Pressure undefined for zero density")
    kinetic = 0.5 * (U[..., 1] ** 2 + U[..., 2] ** 2) / rho
    return (gas.gamma - 1.0) * (U[..., 3] - kinetic)


def velocity(U: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    U = _as_state(U)
    return U[..., 1] / U[..., 0], U[..., 2] / U[..., 0]


def sound_speed(U: ArrayLike, gas: GasModel = DEFAULT_GAS) -> np.ndarray:
    U = _as_state(U)
    return np.sqrt(gas.gamma * pressure(U, gas) / U[..., 0])


def to_conservative(
    rho: ArrayLike,
    u: ArrayLike,
    v: ArrayLike,
    p: ArrayLike,
    gas: GasModel = DEFAULT_GAS,
) -> np.ndarray:
    """Build conserved states from primitive variables."""
    rho, u, v, p = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (rho, u, v, p))
    )
    E = p / (gas.gamma - 1.0) + 0.5 * rho * (u * u + v * v)
    return np.stack([rho, rho * u, rho * v, E], axis=-1)


def to_primitive(U: ArrayLike, gas: GasModel = DEFAULT_GAS) -> np.ndarray:
    """Return ``(rho, u, v, p)`` stacked on the trailing axis."""
    U = _as_state(U)
    u, v = velocity(U)
    return np.stack([U[..., 0], u, v, pressure(U, gas)], axis=-1)


def is_admissible(U: ArrayLike, gas: GasModel = DEFAULT_GAS) -> Union[bool, np.ndarray]:
    """Pointwise test for ``rho > 0`` and ``p > 0``.

    Returns a bool for a single state, a bool array otherwise.

    Raises:
        InadmissibleStateError: If any entry is non-finite.
    """
    U = _as_state(U)
    _require_finite(U)
    rho = U[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        kinetic = 0.5 * (U[..., 1] ** 2 + U[..., 2] ** 2) / np.where(rho > 0, rho, 1.0)
    p = (gas.gamma - 1.0) * (U[..., 3] - kinetic)
    ok = (rho > 0.0) & (p > 0.0)
    if ok.ndim == 0:
        return bool(ok)
    return ok


def physical_flux(
    U: ArrayLike, gas: GasModel = DEFAULT_GAS
) -> Tuple[np.ndarray, np.ndarray]:
    """Return the Cartesian fluxes ``(f(U), g(U))``.

    Raises:
        InadmissibleStateError: If any density is nonpositive.
    """
    U = _as_state(U)
    rho = U[..., 0]
    if np.any(rho <= 0.0):
        raise InadmissibleStateError("Physical flux requires positive density")
    u = U[..., 1] / rho
    v = U[..., 2] / rho
    p = pressure(U, gas)
    m_x, m_y, H = U[..., 1], U[..., 2], U[..., 3] + p
    f = np.stack([m_x, m_x * u + p, m_x * v, H * u], axis=-1)
    g = np.stack([m_y, m_y * u, m_y * v + p, H * v], axis=-1)
    return f, g


def normal_flux(U: ArrayLike, n: ArrayLike, gas: GasModel = DEFAULT_GAS) -> np.ndarray:
    """Return ``f(U) n_x + g(U) n_y`` for (not necessarily unit) normals ``n``."""
    f, g = physical_flux(U, gas)
    n = np.asarray(n, dtype=float)
    return f * n[..., 0:1] + g * n[..., 1:2]


def entropy_data(U: ArrayLike, gas: GasModel = DEFAULT_GAS) -> EntropyData:
    """Entropy ``eta = -rho s / (gamma - 1)``, ``V = d eta / dU`` and ``psi = rho u``.

    Raises:
        InadmissibleStateError: If any state is inadmissible.
    """
    U = _as_state(U)
    require_admissible(U, gas, "entropy_data")
    g = gas.gamma
    rho = U[..., 0]
    u, v = velocity(U)
    p = pressure(U, gas)
    s = np.log(p) - g * np.log(rho)
    beta = rho / p
    V = np.stack(
        [
            (g - s) / (g - 1.0) - 0.5 * beta * (u * u + v * v),
            beta * u,
            beta * v,
            -beta,
        ],
        axis=-1,
    )
    return EntropyData(
        eta=-rho * s / (g - 1.0), vars=V, psi_x=U[..., 1], psi_y=U[..., 2]
    )


def entropy_variables(U: ArrayLike, gas: GasModel = DEFAULT_GAS) -> np.ndarray:
    return entropy_data(U, gas).vars


def entropy_flux(
    U: ArrayLike, gas: GasModel = DEFAULT_GAS
) -> Tuple[np.ndarray, np.ndarray]:
    """Return the entropy flux ``q = -rho s u / (gamma - 1)`` components."""
    U = _as_state(U)
    require_admissible(U, gas, "entropy_flux")
    rho = U[..., 0]
    s = np.log(pressure(U, gas)) - gas.gamma * np.log(rho)
    scale = -s / (gas.gamma - 1.0)
    return scale * U[..., 1], scale * U[..., 2]


def ln_mean(x: ArrayLike, y: ArrayLike, epsilon: float = LN_MEAN_EPS) -> np.ndarray:
    """Logarithmic mean ``(y - x) / log(y / x)`` with a series near ``x == y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    f2 = (x * (x - 2 * y) + y * y) / (x * (x + 2 * y) + y * y)
    series = (x + y) / (2 + f2 * 2 / 3 + f2 * f2 * 2 / 5 + f2 * f2 * f2 * 2 / 7)
    small = f2 < epsilon
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = (y - x) / np.log(y / x)
    return np.where(small, series, exact)


def ec_flux(
    U_L: ArrayLike, U_R: ArrayLike, gas: GasModel = DEFAULT_GAS
) -> Tuple[np.ndarray, np.ndarray]:
    """Kinetic-energy-preserving entropy-conservative two-point flux.

    Satisfies ``(V_R - V_L) . f# = psi_x_R - psi_x_L`` and the analogous
    relation for ``g#``.

    Raises:
        InadmissibleStateError: If either state is inadmissible.
    """
    U_L = _as_state(U_L)
    U_R = _as_state(U_R)
    require_admissible(U_L, gas, "ec_flux")
    require_admissible(U_R, gas, "ec_flux")
    return _ec_flux_unchecked(U_L, U_R, gas)


def _ec_flux_unchecked(
    U_L: np.ndarray, U_R: np.ndarray, gas: GasModel
) -> Tuple[np.ndarray, np.ndarray]:
    rho_l, rho_r = U_L[..., 0], U_R[..., 0]
    u_l, v_l = U_L[..., 1] / rho_l, U_L[..., 2] / rho_l
    u_r, v_r = U_R[..., 1] / rho_r, U_R[..., 2] / rho_r
    beta_l = 0.5 * rho_l / pressure(U_L, gas)
    beta_r = 0.5 * rho_r / pressure(U_R, gas)

    rho_mean = ln_mean(rho_l, rho_r)
    beta_mean = ln_mean(beta_l, beta_r)
    u_avg = 0.5 * (u_l + u_r)
    v_avg = 0.5 * (v_l + v_r)
    p_mean = 0.5 * (rho_l + rho_r) / (beta_l + beta_r)
    vel2_avg = 0.5 * (u_l * u_l + v_l * v_l + u_r * u_r + v_r * v_r)
    enthalpy = 0.5 / ((gas.gamma - 1.0) * beta_mean) - 0.5 * vel2_avg

    fm = rho_mean * u_avg
    fmx = fm * u_avg + p_mean
    fmy = fm * v_avg
    f = np.stack([fm, fmx, fmy, fm * enthalpy + u_avg * fmx + v_avg * fmy], axis=-1)

    gm = rho_mean * v_avg
    gmx = gm * u_avg
    gmy = gm * v_avg + p_mean
    g = np.stack([gm, gmx, gmy, gm * enthalpy + u_avg * gmx + v_avg * gmy], axis=-1)
    return f, g


def ec_flux_contracted(
    U_L: np.ndarray, U_R: np.ndarray, n: np.ndarray, gas: GasModel = DEFAULT_GAS
) -> np.ndarray:
    """Return ``f# n_x + g# n_y`` without an admissibility check."""
    f, g = _ec_flux_unchecked(U_L, U_R, gas)
    return f * n[..., 0:1] + g * n[..., 1:2]


def max_wave_speed(
    U_L: ArrayLike, U_R: ArrayLike, n_unit: ArrayLike, gas: GasModel = DEFAULT_GAS
) -> np.ndarray:
    """Davis estimate ``max(|u_L . n| + c_L, |u_R . n| + c_R)`` along unit ``n``."""
    U_L = _as_state(U_L)
    U_R = _as_state(U_R)
    n_unit = np.asarray(n_unit, dtype=float)

    def _speed(U: np.ndarray) -> np.ndarray:
        un = (U[..., 1] * n_unit[..., 0] + U[..., 2] * n_unit[..., 1]) / U[..., 0]
        return np.abs(un) + sound_speed(U, gas)

    return np.maximum(_speed(U_L), _speed(U_R))


def llf_flux(
    U_L: ArrayLike, U_R: ArrayLike, n: ArrayLike, gas: GasModel = DEFAULT_GAS
) -> np.ndarray:
    """Local Lax-Friedrichs flux along the (metric-scaled) normal ``n``.

    Returns ``1/2 (F(U_L) + F(U_R)) . n - alpha |n| / 2 (U_R - U_L)``.

    Raises:
        InadmissibleStateError: If a state is inadmissible.
        ValueError: If any normal has zero length.
    """
    U_L = _as_state(U_L)
    U_R = _as_state(U_R)
    n = np.asarray(n, dtype=float)
    norm = np.hypot(n[..., 0], n[..., 1])
    if np.any(norm == 0.0):
        raise ValueError("LLF flux requires a nonzero normal")
    require_admissible(U_L, gas, "llf_flux")
    require_admissible(U_R, gas, "llf_flux")
    alpha = max_wave_speed(U_L, U_R, n / norm[..., None], gas)
    central = 0.5 * (normal_flux(U_L, n, gas) + normal_flux(U_R, n, gas))
    return central - (0.5 * alpha * norm)[..., None] * (U_R - U_L)
