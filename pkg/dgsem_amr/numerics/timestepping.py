"""Step-size control, limited forward Euler stages and SSPRK3."""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..exceptions import PositivityFailureError, SolverError
from ..mesh.topology import MeshArrays
from ..schemas.run_config import OEConfig, StepConfig
from ..utils.logger import get_logger
from .dgsem import Discretization
from .euler import DEFAULT_GAS, GasModel, entropy_data, is_admissible, pressure
from .limiters import apply_selective_oe, cell_average, limit_field
from .reference_ops import ReferenceOperators

logger = get_logger(__name__)

# Shu-Osher weights (a, b): U_k = a U_0 + b FE(U_{k-1}); stage times are t + c dt
SSPRK3_STAGES = ((0.0, 1.0, 0.0), (0.75, 0.25, 1.0), (1.0 / 3.0, 2.0 / 3.0, 0.5))
# Fraction of the positivity step bound taken when clipping CFL steps
POSITIVITY_DT_SAFETY = 0.5


@dataclass
class StageOptions:
    """Post-processing applied after every forward Euler stage."""

    limiter_enabled: bool = True
    oe: Optional[OEConfig] = None
    eps: float = 1e-13
    debug: bool = False


@dataclass
class StageReport:
    n_troubled: int = 0
    n_limited: int = 0


@dataclass
class StepReport:
    """Summary of one SSPRK3 step."""

    dt: float
    stages: List[StageReport] = field(default_factory=list)

    @property
    def n_troubled(self) -> int:
        return max((s.n_troubled for s in self.stages), default=0)

    @property
    def n_limited(self) -> int:
        return max((s.n_limited for s in self.stages), default=0)


def compute_dt(
    arrays: MeshArrays,
    U: np.ndarray,
    cfg: StepConfig,
    ops: ReferenceOperators,
    gas: GasModel = DEFAULT_GAS,
) -> float:
    """``CFL / (2N + 1) * min_e h_e / (|u_e| + c_e)`` from cell averages.

    Returns ``cfg.fixed_dt`` unchanged when a fixed step is configured.

    Raises:
        SolverError: If the step is not a positive finite number.
    """
    if cfg.fixed_dt is not None:
        return float(cfg.fixed_dt)
    avg = cell_average(U, arrays.J, ops)
    speed = np.hypot(avg[:, 1], avg[:, 2]) / avg[:, 0]
    c = np.sqrt(gas.gamma * pressure(avg, gas) / avg[:, 0])
    dt = cfg.cfl / (2 * ops.degree + 1) * float(np.min(arrays.h / (speed + c)))
    if not (np.isfinite(dt) and dt > 0.0):
        raise SolverError(f"Nonpositive time step {dt}")
    return dt


def _assert_admissible(
    arrays: MeshArrays, U: np.ndarray, gas: GasModel, context: str
) -> None:
    ok = is_admissible(U, gas)
    if not np.all(ok):
        bad = int(np.flatnonzero(~ok.reshape(U.shape[0], -1).all(axis=1))[0])
        rho = U[bad, ..., 0]
        raise PositivityFailureError(
            context, element=int(arrays.ids[bad]), min_rho=float(rho.min())
        )


def forward_euler_stage(
    disc: Discretization,
    U: np.ndarray,
    dt: float,
    t: float,
    options: StageOptions,
) -> Tuple[np.ndarray, StageReport]:
    """``U + dt RHS``, then selective OE, then the positivity limiter."""
    arrays = disc.arrays
    U_next = U + dt * disc.rhs(U, t)
    report = StageReport()
    if options.oe is not None and options.oe.enabled:
        U_next, oe_report = apply_selective_oe(
            arrays, U_next, options.oe, dt, disc.ops, disc.gas
        )
        report.n_troubled = oe_report.n_troubled
    if options.limiter_enabled:
        U_next, lim_report = limit_field(
            arrays, U_next, disc.ops, disc.gas, options.eps
        )
        report.n_limited = lim_report.n_limited
    if options.debug:
        _assert_admissible(arrays, U_next, disc.gas, "stage_output")
    return U_next, report


def ssprk3_step(
    disc: Discretization,
    U: np.ndarray,
    dt: float,
    t: float,
    options: StageOptions,
) -> Tuple[np.ndarray, StepReport]:
    """Three-stage SSP Runge-Kutta step as convex combinations of limited stages."""
    report = StepReport(dt=dt)
    current = U
    for a, b, c in SSPRK3_STAGES:
        stage, stage_report = forward_euler_stage(
            disc, current, dt, t + c * dt, options
        )
        current = a * U + b * stage if a else stage
        report.stages.append(stage_report)
    return current, report


def _incident_beta(disc: Discretization, U: np.ndarray, t: float) -> np.ndarray:
    """Sum of the dissipative weights of every side incident to each node.

    Corner nodes receive two contributions; interior nodes stay zero.
    """
    beta = disc.surface(U, t).beta
    incident = np.zeros_like(disc.arrays.J)
    incident[:, 0, :] += beta[:, 0]
    incident[:, -1, :] += beta[:, 1]
    incident[:, :, 0] += beta[:, 2]
    incident[:, :, -1] += beta[:, 3]
    return incident


def _edge_mask(n: int) -> np.ndarray:
    edge = np.zeros((n, n), dtype=bool)
    edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True
    return edge


def pp_cfl_check(disc: Discretization, U: np.ndarray, dt: float, t: float) -> float:
    """Worst ``w_m w_n J_mn - dt * sum(beta)`` over element boundary nodes."""
    incident = _incident_beta(disc, U, t)
    margin = disc.ops.weights_2d * disc.arrays.J - dt * incident
    worst = float(margin[:, _edge_mask(disc.ops.n)].min())
    if worst < 0.0:
        logger.warning("Positivity CFL margin negative: %.3e (dt=%.3e)", worst, dt)
    return worst


def positivity_dt(disc: Discretization, U: np.ndarray, t: float) -> float:
    """Largest step with a nonnegative positivity CFL margin at every node.

    Unlike ``compute_dt`` this sees the ghost states of inflow boundaries.
    Returns ``inf`` when no side dissipates.
    """
    incident = _incident_beta(disc, U, t)[:, _edge_mask(disc.ops.n)]
    room = (disc.ops.weights_2d * disc.arrays.J)[:, _edge_mask(disc.ops.n)]
    active = incident > 0.0
    if not active.any():
        return float("inf")
    return float(np.min(room[active] / incident[active]))


def total_entropy(
    arrays: MeshArrays,
    U: np.ndarray,
    ops: ReferenceOperators,
    gas: GasModel = DEFAULT_GAS,
) -> float:
    """``sum w_i w_j J_ij eta(U_ij)``."""
    eta = entropy_data(U, gas).eta
    return float(np.einsum("ij,eij,eij->", ops.weights_2d, arrays.J, eta))


def conserved_totals(
    arrays: MeshArrays, U: np.ndarray, ops: ReferenceOperators
) -> np.ndarray:
    """Integrals of (rho, rho u, rho v, E) over the mesh."""
    return np.einsum("ij,eij,eijc->c", ops.weights_2d, arrays.J, U)
