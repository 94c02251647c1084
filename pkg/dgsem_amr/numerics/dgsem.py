"""Entropy-stable DGSEM residual on curvilinear 2:1 nonconforming meshes.

Per node the semi-discrete system reads::

    w_i w_j J_ij dU/dt = -w_i w_j (vol_xi + vol_eta)_ij
                         + w_t (F(U) . n - F* . n)   (side nodes only)

with the split-form volume terms built from the entropy-conservative
two-point flux and arithmetic-averaged contravariant metrics, and ``F*`` the
outward numerical flux on each side node. Conforming and boundary sides use
the LLF flux; 2:1 sides use either the entropy-stable nonconforming flux or
the mortar flux.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..exceptions import MeshError, PositivityFailureError
from ..mesh.geometry import X_ETA, X_XI, Y_ETA, Y_XI, side_traces
from ..mesh.topology import MeshArrays, MeshTopology
from ..schemas.run_config import FluxMode
from ..utils.logger import get_logger
from .boundary import BoundaryConditions, resolve_boundary
from .euler import (
    DEFAULT_GAS,
    GasModel,
    ec_flux_contracted,
    entropy_data,
    is_admissible,
    llf_flux,
    max_wave_speed,
    normal_flux,
    pressure,
    require_admissible,
)
from .limiters import limit_trace_for_interpolation
from .reference_ops import ReferenceOperators

logger = get_logger(__name__)

VOLUME_CHUNK = 4096
# Entries of the interpolation matrix below this are treated as zero
P_ZERO_TOL = 1e-14
DEFAULT_EPS = 1e-13


@dataclass
class NonconformingFluxes:
    """Outward numerical fluxes on the three sides of a batch of 2:1 faces."""

    fine: np.ndarray  # (F, 2, n, 4)
    coarse: np.ndarray  # (F, n, 4)
    alpha: np.ndarray  # (F, 2, n) wave speed per fine node


@dataclass
class SurfaceData:
    """Numerical flux buffer and per-node dissipation weights of every side."""

    fstar: np.ndarray  # (E, 4, n, 4)
    beta: np.ndarray  # (E, 4, n)


def contravariant_metrics(metrics: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Return ``(J a^1, J a^2) = ((y_eta, -x_eta), (-y_xi, x_xi))``."""
    ja1 = np.stack([metrics[..., Y_ETA], -metrics[..., X_ETA]], axis=-1)
    ja2 = np.stack([-metrics[..., Y_XI], metrics[..., X_XI]], axis=-1)
    return ja1, ja2


def volume_residual(
    U: np.ndarray,
    metrics: np.ndarray,
    ops: ReferenceOperators,
    gas: GasModel = DEFAULT_GAS,
    chunk: int = VOLUME_CHUNK,
) -> np.ndarray:
    """Split-form volume terms ``2 sum_m D_im f#(U_i, U_m) . {{Ja}}``.

    Accepts a single element ``(n, n, 4)`` or a batch ``(E, n, n, 4)``.

    Raises:
        InadmissibleStateError: If any nodal state is inadmissible.
    """
    single = U.ndim == 3
    if single:
        U = U[None]
        metrics = metrics[None]
    require_admissible(U, gas, "volume_residual")
    D = ops.D
    ja1, ja2 = contravariant_metrics(metrics)
    out = np.empty_like(U)
    for start in range(0, U.shape[0], chunk):
        sl = slice(start, start + chunk)
        u = U[sl]
        # xi pairs (i, m) at fixed j
        avg1 = 0.5 * (ja1[sl][:, :, None] + ja1[sl][:, None, :])
        f_xi = ec_flux_contracted(u[:, :, None], u[:, None, :], avg1, gas)
        # eta pairs (j, m) at fixed i
        avg2 = 0.5 * (ja2[sl][:, :, :, None] + ja2[sl][:, :, None, :])
        f_eta = ec_flux_contracted(u[:, :, :, None], u[:, :, None, :], avg2, gas)
        out[sl] = 2.0 * (
            np.einsum("im,eimjc->eijc", D, f_xi) + np.einsum("jm,eijmc->eijc", D, f_eta)
        )
    return out[0] if single else out


def _unit(n: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    norm = np.linalg.norm(n, axis=-1)
    safe = np.where(norm > 0.0, norm, 1.0)
    return n / safe[..., None], norm


def conforming_face_flux(
    U_L: np.ndarray, U_R: np.ndarray, n_L: np.ndarray, gas: GasModel = DEFAULT_GAS
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """LLF flux on matched conforming traces.

    Returns:
        ``(F_L, F_R, alpha)``: outward fluxes for each side (``F_R = -F_L``)
        and the nodal wave speeds.
    """
    flux = llf_flux(U_L, U_R, n_L, gas)
    unit, _ = _unit(n_L)
    alpha = max_wave_speed(U_L, U_R, unit, gas)
    return flux, -flux, alpha


def es_nonconforming_fluxes(
    U_C: np.ndarray,
    U_F: np.ndarray,
    n_C: np.ndarray,
    n_F: np.ndarray,
    ops: ReferenceOperators,
    gas: GasModel = DEFAULT_GAS,
) -> NonconformingFluxes:
    """Entropy-stable nonconforming fluxes with the modified LLF dissipation.

    Pairs fine node ``i`` of sub-edge ``k`` with every coarse node ``j``
    through ``n_ij = (n_i^F - n_j^C / 2) / 2``. The fine flux is
    ``sum_j P_ij F*_ij`` and the coarse flux ``-2 sum_k sum_i proj_ji F*_ij``,
    where ``F*_ij`` carries ``sign(P_ij)`` on its dissipation.

    Args:
        U_C: Coarse traces ``(F, n, 4)``
        U_F: Fine traces ``(F, 2, n, 4)``
        n_C: Coarse outward normals ``(F, n, 2)``
        n_F: Fine outward normals ``(F, 2, n, 2)``
        ops: Reference operators
        gas: Gas model

    Raises:
        InadmissibleStateError: If a trace state is inadmissible.
    """
    require_admissible(U_C, gas, "es_nonconforming_fluxes")
    require_admissible(U_F, gas, "es_nonconforming_fluxes")
    P = ops.interp
    proj = ops.proj

    u_f = U_F[:, :, :, None, :]
    u_c = U_C[:, None, None, :, :]
    n_ij = 0.5 * (n_F[:, :, :, None, :] - 0.5 * n_C[:, None, None, :, :])
    unit_ij, norm_ij = _unit(n_ij)
    _, norm_f = _unit(n_F)

    coupled = np.abs(P) > P_ZERO_TOL
    pair_alpha = max_wave_speed(u_f, u_c, unit_ij, gas)
    # Dissipation scales with |n_F|, so alpha |n_F| must cover speed |n_ij|
    pair_alpha = pair_alpha * np.maximum(1.0, norm_ij / norm_f[..., None])
    alpha = np.where(coupled[None], pair_alpha, 0.0).max(axis=-1)

    central = 0.5 * (normal_flux(u_f, n_ij, gas) + normal_flux(u_c, n_ij, gas))
    scale = np.sign(P)[None] * (0.5 * alpha * norm_f)[..., None]
    dissipation = scale[..., None] * (u_c - u_f)
    pair_flux = central - dissipation

    fine = np.einsum("kij,fkijc->fkic", P, pair_flux)
    coarse = -2.0 * np.einsum("kji,fkijc->fjc", proj, pair_flux)
    return NonconformingFluxes(fine=fine, coarse=coarse, alpha=alpha)


def mortar_nonconforming_fluxes(
    U_C: np.ndarray,
    U_F: np.ndarray,
    n_C: np.ndarray,
    n_F: np.ndarray,
    ops: ReferenceOperators,
    gas: GasModel = DEFAULT_GAS,
    eps: float = DEFAULT_EPS,
    coarse_ids: Optional[np.ndarray] = None,
) -> NonconformingFluxes:
    """Mortar fluxes: interpolate the coarse trace, LLF on the fine nodes, project back.

    Coarse traces whose interpolants leave the admissible set are scaled
    toward their edge average before interpolation.

    Raises:
        PositivityFailureError: If an interpolated state stays inadmissible.
    """
    require_admissible(U_C, gas, "mortar_nonconforming_fluxes")
    require_admissible(U_F, gas, "mortar_nonconforming_fluxes")
    P = ops.interp
    proj = ops.proj

    U_tilde = np.einsum("kij,fjc->fkic", P, U_C)
    bad = ~np.all(is_admissible(U_tilde, gas), axis=(1, 2))
    if np.any(bad):
        logger.warning(
            "Limiting %d coarse traces before mortar interpolation", int(bad.sum())
        )
        for f in np.flatnonzero(bad):
            element = None if coarse_ids is None else int(coarse_ids[f])
            limited = limit_trace_for_interpolation(
                U_C[f], P, ops.weights, gas, eps, element=element
            )
            U_tilde[f] = np.einsum("kij,jc->kic", P, limited)
            if not np.all(is_admissible(U_tilde[f], gas)):
                raise PositivityFailureError(
                    "mortar_interpolation",
                    element=element,
                    min_rho=float(U_tilde[f][..., 0].min()),
                    min_p=float(np.min(pressure(U_tilde[f], gas))),
                )

    fine = llf_flux(U_F, U_tilde, n_F, gas)
    unit, _ = _unit(n_F)
    alpha = max_wave_speed(U_F, U_tilde, unit, gas)
    coarse = -2.0 * np.einsum("kji,fkic->fjc", proj, fine)
    return NonconformingFluxes(fine=fine, coarse=coarse, alpha=alpha)


def _coarse_beta(
    alpha: np.ndarray, norm_f: np.ndarray, ops: ReferenceOperators
) -> np.ndarray:
    w = ops.weights
    return 2.0 * w * np.einsum("kji,fki->fj", np.abs(ops.proj), alpha * norm_f)


def surface_fluxes(
    arrays: MeshArrays,
    U: np.ndarray,
    mode: FluxMode,
    bcs: BoundaryConditions,
    t: float,
    ops: ReferenceOperators,
    gas: GasModel = DEFAULT_GAS,
    eps: float = DEFAULT_EPS,
) -> SurfaceData:
    """Fill the outward numerical flux of every element side exactly once."""
    E = arrays.n_elements
    n = ops.n
    w = ops.weights
    traces = side_traces(U)
    normals = arrays.normals
    fstar = np.zeros((E, 4, n, 4))
    beta = np.zeros((E, 4, n))

    if arrays.conf_l.size:
        U_L = traces[arrays.conf_l, arrays.conf_ls]
        U_R = traces[arrays.conf_r, arrays.conf_rs]
        n_L = normals[arrays.conf_l, arrays.conf_ls]
        F_L, F_R, alpha = conforming_face_flux(U_L, U_R, n_L, gas)
        fstar[arrays.conf_l, arrays.conf_ls] = F_L
        fstar[arrays.conf_r, arrays.conf_rs] = F_R
        b = w * alpha * np.linalg.norm(n_L, axis=-1)
        beta[arrays.conf_l, arrays.conf_ls] = b
        beta[arrays.conf_r, arrays.conf_rs] = b

    if arrays.nc_c.size:
        fine_sides = arrays.nc_fs[:, None]
        U_C = traces[arrays.nc_c, arrays.nc_cs]
        U_F = traces[arrays.nc_f, fine_sides]
        n_C = normals[arrays.nc_c, arrays.nc_cs]
        n_F = normals[arrays.nc_f, fine_sides]
        if FluxMode(mode) is FluxMode.ES:
            nc = es_nonconforming_fluxes(U_C, U_F, n_C, n_F, ops, gas)
        else:
            nc = mortar_nonconforming_fluxes(
                U_C, U_F, n_C, n_F, ops, gas, eps, coarse_ids=arrays.ids[arrays.nc_c]
            )
        fstar[arrays.nc_c, arrays.nc_cs] = nc.coarse
        fstar[arrays.nc_f, fine_sides] = nc.fine
        norm_f = np.linalg.norm(n_F, axis=-1)
        if FluxMode(mode) is FluxMode.ES:
            beta_f = w * np.einsum(
                "kij,fki->fki", np.abs(ops.interp), nc.alpha * norm_f
            )
        else:
            beta_f = w * nc.alpha * norm_f
        beta[arrays.nc_f, fine_sides] = beta_f
        beta[arrays.nc_c, arrays.nc_cs] = _coarse_beta(nc.alpha, norm_f, ops)

    if arrays.bnd_e.size:
        xy = side_traces(arrays.geometry)
        for tag in np.unique(arrays.bnd_tag):
            sel = arrays.bnd_tag == tag
            e, s = arrays.bnd_e[sel], arrays.bnd_s[sel]
            bc = resolve_boundary(bcs, str(tag))
            U_in = traces[e, s]
            n_out = normals[e, s]
            ghost = bc.ghost(U_in, xy[e, s], n_out, t, gas)
            F_in, _, alpha = conforming_face_flux(U_in, ghost, n_out, gas)
            fstar[e, s] = F_in
            beta[e, s] = w * alpha * np.linalg.norm(n_out, axis=-1)

    return SurfaceData(fstar=fstar, beta=beta)


def surface_residual(
    U: np.ndarray,
    fstar: np.ndarray,
    normals: np.ndarray,
    ops: ReferenceOperators,
    gas: GasModel,
) -> np.ndarray:
    """Lift ``w_t (F(U) . n - F*)`` from the side nodes into the element nodes."""
    w = ops.weights[None, :, None]
    diff = w * (normal_flux(side_traces(U), normals, gas) - fstar)
    out = np.zeros_like(U)
    out[:, 0, :] += diff[:, 0]
    out[:, -1, :] += diff[:, 1]
    out[:, :, 0] += diff[:, 2]
    out[:, :, -1] += diff[:, 3]
    return out


def semidiscrete_rhs(
    mesh: MeshTopology,
    U: np.ndarray,
    mode: FluxMode,
    bcs: BoundaryConditions,
    t: float,
    ops: ReferenceOperators,
    gas: GasModel = DEFAULT_GAS,
    eps: float = DEFAULT_EPS,
) -> np.ndarray:
    """Time derivative of every nodal state on the active mesh.

    Raises:
        MeshError: If ``U`` does not match the active mesh or a tag is unbound.
        InadmissibleStateError: If a nodal state is inadmissible.
        PositivityFailureError: If a mortar interpolant cannot be made admissible.
    """
    arrays = mesh.arrays()
    expected = (arrays.n_elements, ops.n, ops.n, 4)
    if U.shape != expected:
        raise MeshError(f"Solution shape {U.shape} does not match mesh {expected}")
    surface = surface_fluxes(arrays, U, mode, bcs, t, ops, gas, eps)
    return assemble_rhs(arrays, U, surface, ops, gas)


def assemble_rhs(
    arrays: MeshArrays,
    U: np.ndarray,
    surface: SurfaceData,
    ops: ReferenceOperators,
    gas: GasModel = DEFAULT_GAS,
) -> np.ndarray:
    ww = ops.weights_2d[None, :, :, None]
    residual = -ww * volume_residual(U, arrays.metrics, ops, gas)
    residual += surface_residual(U, surface.fstar, arrays.normals, ops, gas)
    return residual / (ww * arrays.J[..., None])


def interface_entropy_production(
    U_C: np.ndarray,
    U_F: np.ndarray,
    n_C: np.ndarray,
    n_F: np.ndarray,
    fluxes: NonconformingFluxes,
    ops: ReferenceOperators,
    gas: GasModel = DEFAULT_GAS,
) -> np.ndarray:
    """Contribution of each 2:1 interface to ``d/dt sum w w J eta``.

    Nonpositive for an entropy-stable interface.
    """
    w = ops.weights
    ent_f = entropy_data(U_F, gas)
    ent_c = entropy_data(U_C, gas)
    psi_f = ent_f.psi_x * n_F[..., 0] + ent_f.psi_y * n_F[..., 1]
    psi_c = ent_c.psi_x * n_C[..., 0] + ent_c.psi_y * n_C[..., 1]
    fine_density = np.sum(ent_f.vars * fluxes.fine, axis=-1) - psi_f
    coarse_density = np.sum(ent_c.vars * fluxes.coarse, axis=-1) - psi_c
    fine = np.einsum("i,fki->f", w, fine_density)
    coarse = np.einsum("j,fj->f", w, coarse_density)
    return -(fine + coarse)


def entropy_rate(
    arrays: MeshArrays,
    U: np.ndarray,
    rhs: np.ndarray,
    ops: ReferenceOperators,
    gas: GasModel = DEFAULT_GAS,
) -> float:
    """Return ``sum_e sum_ij w_i w_j J_ij V_ij . (dU/dt)_ij``."""
    V = entropy_data(U, gas).vars
    return float(np.einsum("ij,eij,eijc,eijc->", ops.weights_2d, arrays.J, V, rhs))


class Discretization:
    """Spatial operator bound to one mesh, flux mode and boundary set."""

    def __init__(
        self,
        mesh: MeshTopology,
        ops: ReferenceOperators,
        mode: FluxMode,
        bcs: BoundaryConditions,
        gas: GasModel = DEFAULT_GAS,
        eps: float = DEFAULT_EPS,
        monitor_entropy: bool = False,
    ):
        self.mesh = mesh
        self.ops = ops
        self.mode = FluxMode(mode)
        self.bcs = bcs
        self.gas = gas
        self.eps = eps
        self.monitor_entropy = monitor_entropy

    @property
    def arrays(self) -> MeshArrays:
        return self.mesh.arrays()

    def surface(self, U: np.ndarray, t: float) -> SurfaceData:
        return surface_fluxes(
            self.arrays, U, self.mode, self.bcs, t, self.ops, self.gas, self.eps
        )

    def rhs(self, U: np.ndarray, t: float) -> np.ndarray:
        rhs = semidiscrete_rhs(
            self.mesh, U, self.mode, self.bcs, t, self.ops, self.gas, self.eps
        )
        if self.monitor_entropy and self.mode is FluxMode.ES:
            self._check_interfaces(U)
        return rhs

    def _check_interfaces(self, U: np.ndarray) -> None:
        arrays = self.arrays
        if not arrays.nc_c.size:
            return
        traces = side_traces(U)
        fine_sides = arrays.nc_fs[:, None]
        U_C = traces[arrays.nc_c, arrays.nc_cs]
        U_F = traces[arrays.nc_f, fine_sides]
        n_C = arrays.normals[arrays.nc_c, arrays.nc_cs]
        n_F = arrays.normals[arrays.nc_f, fine_sides]
        fluxes = es_nonconforming_fluxes(U_C, U_F, n_C, n_F, self.ops, self.gas)
        production = interface_entropy_production(
            U_C, U_F, n_C, n_F, fluxes, self.ops, self.gas
        )
        worst = float(production.max())
        if worst > 1e-10:
            logger.warning("Positive interface entropy production %.3e", worst)
