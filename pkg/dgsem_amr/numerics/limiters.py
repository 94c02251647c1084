"""Zhang-Shu positivity limiter and oscillation-eliminating (OE) damping.

Both operate on whole batches of elements: nodal fields have shape
``(E, n, n, 4)`` and element averages use the metric-weighted LGL rule.
"""

from dataclasses import dataclass, field
from math import factorial
from typing import Dict, List, Optional, Tuple

import numpy as np
from numpy.polynomial import legendre

from ..exceptions import PositivityFailureError
from ..mesh.geometry import X_ETA, X_XI, Y_ETA, Y_XI, side_traces
from ..mesh.topology import MeshArrays
from ..schemas.run_config import OEConfig
from ..utils.logger import get_logger
from .euler import DEFAULT_GAS, GasModel, pressure
from .reference_ops import ReferenceOperators

logger = get_logger(__name__)

DEFAULT_EPS = 1e-13
BISECTION_STEPS = 60
# Relative spread below which a component counts as constant on an element
CONSTANT_TOL = 1e-12


@dataclass
class LimiterReport:
    """Per-element record of one limiting pass."""

    theta: np.ndarray  # Zhang-Shu scaling factor in [0, 1]
    indicator: np.ndarray = field(default_factory=lambda: np.zeros(0))
    troubled: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    delta: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    @property
    def n_limited(self) -> int:
        return int(np.count_nonzero(self.theta < 1.0))

    @property
    def n_troubled(self) -> int:
        return int(np.count_nonzero(self.troubled))


def _weighted_jacobian(J: np.ndarray, ops: ReferenceOperators) -> np.ndarray:
    return ops.weights_2d * J


def cell_average(U: np.ndarray, J: np.ndarray, ops: ReferenceOperators) -> np.ndarray:
    """Return ``sum w w J U / sum w w J`` for one element or a batch."""
    wwj = _weighted_jacobian(J, ops)
    total = np.einsum("...ij,...ijc->...c", wwj, U)
    return total / wwj.sum(axis=(-2, -1))[..., None]


def _pressure_theta(
    states: np.ndarray, avg: np.ndarray, eps_p: np.ndarray, gas: GasModel
) -> np.ndarray:
    """Largest ``t`` per element keeping ``p(avg + t (state - avg)) >= eps_p``.

    The bound must hold at every node of the element.

    ``states`` is ``(E, M, 4)``; densities along each segment must be positive.
    """
    theta = np.ones(states.shape[0])
    p = pressure(states, gas)
    bad = p < eps_p[:, None]
    if not np.any(bad):
        return theta
    elem, node = np.nonzero(bad)
    s = states[elem, node]
    a = avg[elem]
    target = eps_p[elem]
    lo = np.zeros(elem.size)
    hi = np.ones(elem.size)
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        ok = pressure(a + mid[:, None] * (s - a), gas) >= target
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    np.minimum.at(theta, elem, lo)
    return theta


def _check_averages(
    avg: np.ndarray, gas: GasModel, context: str, element_ids: Optional[np.ndarray]
) -> np.ndarray:
    """Pressure of admissible averages; raise on the first inadmissible one."""
    rho = avg[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        safe = np.where(rho > 0.0, rho, 1.0)
        kinetic = 0.5 * (avg[..., 1] ** 2 + avg[..., 2] ** 2) / safe
        p = (gas.gamma - 1.0) * (avg[..., 3] - kinetic)
    bad = ~((rho > 0.0) & (p > 0.0) & np.all(np.isfinite(avg), axis=-1))
    if np.any(bad):
        first = int(np.flatnonzero(bad)[0])
        element = int(element_ids[first]) if element_ids is not None else first
        logger.error("Inadmissible cell average on element %d (%s)", element, context)
        raise PositivityFailureError(
            context, element=element, min_rho=float(rho[first]), min_p=float(p[first])
        )
    return p


def zhang_shu_limit(
    U: np.ndarray,
    J: np.ndarray,
    ops: ReferenceOperators,
    gas: GasModel = DEFAULT_GAS,
    eps: float = DEFAULT_EPS,
    element_ids: Optional[np.ndarray] = None,
    context: str = "zhang_shu_limit",
) -> Tuple[np.ndarray, np.ndarray]:
    """Scale nodal states toward the cell average until every node is admissible.

    Density is first raised to ``min(eps, rho_bar)``, then all components are
    scaled so that ``p >= min(eps, p_bar)``. Elements that need no scaling are
    returned bit-identical.

    Args:
        U: Nodal states ``(n, n, 4)`` or ``(E, n, n, 4)``
        J: Jacobians matching ``U``
        ops: Reference operators
        gas: Gas model
        eps: Absolute positivity floor
        element_ids: Element ids used in failure messages
        context: Label used in failure messages

    Returns:
        Tuple of (limited states, scaling factor per element)

    Raises:
        PositivityFailureError: If a cell average is inadmissible.
    """
    single = U.ndim == 3
    if single:
        U, J = U[None], J[None]
    E = U.shape[0]
    avg = cell_average(U, J, ops)
    p_bar = _check_averages(avg, gas, context, element_ids)
    if not np.all(np.isfinite(U)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(U.reshape(E, -1)), axis=1))[0])
        raise PositivityFailureError(
            f"{context}:nonfinite",
            element=int(element_ids[bad]) if element_ids is not None else bad,
        )

    rho_bar = avg[:, 0]
    eps_rho = np.minimum(eps, rho_bar)
    rho_min = U[..., 0].reshape(E, -1).min(axis=1)
    needs_rho = rho_min < eps_rho
    theta1 = np.ones(E)
    theta1[needs_rho] = (rho_bar[needs_rho] - eps_rho[needs_rho]) / (
        rho_bar[needs_rho] - rho_min[needs_rho]
    )
    theta1 = np.clip(theta1, 0.0, 1.0)

    out = U.copy()
    if np.any(needs_rho):
        rb = rho_bar[needs_rho][:, None, None]
        t1 = theta1[needs_rho][:, None, None]
        out[needs_rho, ..., 0] = rb + t1 * (U[needs_rho, ..., 0] - rb)

    eps_p = np.minimum(eps, p_bar)
    theta2 = _pressure_theta(out.reshape(E, -1, 4), avg, eps_p, gas)
    needs_p = theta2 < 1.0
    if np.any(needs_p):
        a = avg[needs_p][:, None, None, :]
        out[needs_p] = a + theta2[needs_p][:, None, None, None] * (out[needs_p] - a)

    theta = np.minimum(theta1, theta2)
    return (out[0], theta) if single else (out, theta)


def limit_field(
    arrays: MeshArrays,
    U: np.ndarray,
    ops: ReferenceOperators,
    gas: GasModel = DEFAULT_GAS,
    eps: float = DEFAULT_EPS,
) -> Tuple[np.ndarray, LimiterReport]:
    """Apply the Zhang-Shu limiter on every active element."""
    limited, theta = zhang_shu_limit(U, arrays.J, ops, gas, eps, element_ids=arrays.ids)
    report = LimiterReport(theta=theta)
    if report.n_limited:
        logger.debug("Positivity limiter active on %d elements", report.n_limited)
    return limited, report


def limit_trace_for_interpolation(
    trace: np.ndarray,
    interp: np.ndarray,
    weights: np.ndarray,
    gas: GasModel = DEFAULT_GAS,
    eps: float = DEFAULT_EPS,
    element: Optional[int] = None,
) -> np.ndarray:
    """Scale a coarse edge trace toward its edge average.

    After scaling every interpolated fine-node state is admissible.

    Interpolation is affine, so scaling the trace by ``theta`` scales every
    interpolated state toward the edge average by the same factor.

    Raises:
        PositivityFailureError: If the edge average is inadmissible.
    """
    avg = np.einsum("j,jc->c", weights, trace) / weights.sum()
    ids = None if element is None else np.asarray([element])
    p_bar = _check_averages(avg[None], gas, "mortar_trace", ids)[0]
    targets = np.einsum("kij,jc->kic", interp, trace).reshape(-1, 4)

    rho_bar = avg[0]
    eps_rho = min(eps, rho_bar)
    rho_min = targets[:, 0].min()
    theta1 = 1.0
    if rho_min < eps_rho:
        theta1 = float(np.clip((rho_bar - eps_rho) / (rho_bar - rho_min), 0.0, 1.0))
    scaled = avg + theta1 * (targets - avg)
    eps_p = np.asarray([min(eps, p_bar)])
    theta2 = _pressure_theta(scaled[None], avg[None], eps_p, gas)[0]
    theta = theta1 * theta2
    return avg + theta * (trace - avg)


# ----------------------------------------------------------------------
# Oscillation-eliminating damping
# ----------------------------------------------------------------------


def _face_normal_weights(arrays: MeshArrays, ops: ReferenceOperators) -> np.ndarray:
    return ops.weights * np.linalg.norm(arrays.normals, axis=-1)


def face_jump_averages(
    arrays: MeshArrays, fields: List[np.ndarray], ops: ReferenceOperators
) -> List[np.ndarray]:
    """Face averages of ``|[[f]]|`` on every element side.

    Returns one ``(E, 4, 4)`` array per field, indexed by element, side and
    component.

    Conforming jumps compare matched nodes; fine sides compare against the
    interpolated coarse trace; coarse sides aggregate both fine segments on
    the fine nodal sets. Boundary sides carry no jump.
    """
    wn = _face_normal_weights(arrays, ops)
    E = arrays.n_elements
    P = ops.interp
    den = np.zeros((E, 4))
    conf = arrays.conf_l.size > 0
    nonconf = arrays.nc_c.size > 0
    fine_sides = arrays.nc_fs[:, None]
    if conf:
        w_l = wn[arrays.conf_l, arrays.conf_ls]
        den[arrays.conf_l, arrays.conf_ls] = w_l.sum(axis=-1)
        w_r = wn[arrays.conf_r, arrays.conf_rs]
        den[arrays.conf_r, arrays.conf_rs] = w_r.sum(axis=-1)
    if nonconf:
        w_f = wn[arrays.nc_f, fine_sides]  # (F, 2, n)
        den[arrays.nc_f, fine_sides] = w_f.sum(axis=-1)
        den[arrays.nc_c, arrays.nc_cs] = w_f.sum(axis=(1, 2))
    den = np.where(den > 0.0, den, 1.0)

    results = []
    for f in fields:
        T = side_traces(f)
        num = np.zeros((E, 4, 4))
        if conf:
            left = T[arrays.conf_l, arrays.conf_ls]
            jump = np.abs(left - T[arrays.conf_r, arrays.conf_rs])
            num[arrays.conf_l, arrays.conf_ls] = np.einsum("fi,fic->fc", w_l, jump)
            num[arrays.conf_r, arrays.conf_rs] = np.einsum("fi,fic->fc", w_r, jump)
        if nonconf:
            coarse = np.einsum("kij,fjc->fkic", P, T[arrays.nc_c, arrays.nc_cs])
            jump = np.abs(T[arrays.nc_f, fine_sides] - coarse)
            num[arrays.nc_f, fine_sides] = np.einsum("fki,fkic->fkc", w_f, jump)
            num[arrays.nc_c, arrays.nc_cs] = np.einsum("fki,fkic->fc", w_f, jump)
        results.append(num / den[..., None])
    return results


def _spread(U: np.ndarray, avg: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """``max |U - U_bar|`` per element and component, plus a constant mask."""
    E = U.shape[0]
    spread = np.abs(U - avg[:, None, None, :]).reshape(E, -1, 4).max(axis=1)
    constant = spread <= CONSTANT_TOL * np.maximum(1.0, np.abs(avg))
    return np.where(constant, 1.0, spread), constant


def shock_indicator(
    arrays: MeshArrays,
    U: np.ndarray,
    ops: ReferenceOperators,
    gas: GasModel = DEFAULT_GAS,
) -> np.ndarray:
    """Jump indicator ``I = sum_f max_r sigma_0`` per element."""
    avg = cell_average(U, arrays.J, ops)
    spread, constant = _spread(U, avg)
    (theta0,) = face_jump_averages(arrays, [U], ops)
    sigma0 = theta0 / (2.0 * (2 * ops.degree - 1) * spread[:, None, :])
    sigma0 = np.where(constant[:, None, :], 0.0, sigma0)
    return sigma0.max(axis=-1).sum(axis=-1)


def physical_derivatives(
    U: np.ndarray,
    metrics: np.ndarray,
    J: np.ndarray,
    ops: ReferenceOperators,
    order: int,
) -> Dict[Tuple[int, int], np.ndarray]:
    """Nodal ``d^(a+b) U / dx^a dy^b`` for ``a + b <= order`` via the inverse metric."""
    D = ops.D
    inv_j = 1.0 / J[..., None]
    x_xi = metrics[..., X_XI, None]
    x_eta = metrics[..., X_ETA, None]
    y_xi = metrics[..., Y_XI, None]
    y_eta = metrics[..., Y_ETA, None]

    def grad_ref(f: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return np.einsum("im,emjc->eijc", D, f), np.einsum("jm,eimc->eijc", D, f)

    def d_x(f: np.ndarray) -> np.ndarray:
        f_xi, f_eta = grad_ref(f)
        return (y_eta * f_xi - y_xi * f_eta) * inv_j

    def d_y(f: np.ndarray) -> np.ndarray:
        f_xi, f_eta = grad_ref(f)
        return (-x_eta * f_xi + x_xi * f_eta) * inv_j

    derivs: Dict[Tuple[int, int], np.ndarray] = {(0, 0): U}
    for m in range(1, order + 1):
        for a in range(m + 1):
            b = m - a
            if a > 0:
                derivs[(a, b)] = d_x(derivs[(a - 1, b)])
            else:
                derivs[(0, b)] = d_y(derivs[(0, b - 1)])
    return derivs


def _wave_speed_scale(avg: np.ndarray, gas: GasModel) -> np.ndarray:
    """``|u_bar| + c_bar`` per element; zero where the average is not a valid state."""
    rho = avg[:, 0]
    safe = np.where(rho > 0.0, rho, 1.0)
    speed = np.hypot(avg[:, 1], avg[:, 2]) / safe
    p = (gas.gamma - 1.0) * (avg[:, 3] - 0.5 * (avg[:, 1] ** 2 + avg[:, 2] ** 2) / safe)
    c = np.sqrt(np.maximum(gas.gamma * p / safe, 0.0))
    return np.where(rho > 0.0, speed + c, 0.0)


def oe_damping(
    arrays: MeshArrays,
    U: np.ndarray,
    ops: ReferenceOperators,
    gas: GasModel = DEFAULT_GAS,
) -> np.ndarray:
    """Damping coefficients ``delta_m`` for ``m = 0..N``, shape ``(E, N + 1)``."""
    N = ops.degree
    avg = cell_average(U, arrays.J, ops)
    spread, constant = _spread(U, avg)
    derivs = physical_derivatives(U, arrays.metrics, arrays.J, ops, N)
    keys = sorted(derivs, key=sum)
    thetas = dict(zip(keys, face_jump_averages(arrays, [derivs[k] for k in keys], ops)))

    h = arrays.h
    delta = np.zeros((U.shape[0], N + 1))
    cumulative = np.zeros((U.shape[0], 4, 4))
    for m in range(N + 1):
        for key in keys:
            if sum(key) == m:
                cumulative = cumulative + thetas[key]
        coef = (2 * m + 1) * h**m / (2.0 * (2 * N - 1) * factorial(m))
        sigma = coef[:, None, None] * cumulative / spread[:, None, :]
        sigma = np.where(constant[:, None, :], 0.0, sigma)
        delta[:, m] = sigma.max(axis=-1).sum(axis=-1)
    return delta * (_wave_speed_scale(avg, gas) / h)[:, None]


def _legendre_modes(ops: ReferenceOperators) -> Tuple[np.ndarray, np.ndarray]:
    """Tensor Legendre basis at the nodes ``(n*n, (N+1)^2)`` and each mode's degree."""
    N = ops.degree
    V = legendre.legvander(ops.nodes, N)
    phi = np.einsum("ia,jb->ijab", V, V).reshape(ops.n**2, (N + 1) ** 2)
    a, b = np.meshgrid(np.arange(N + 1), np.arange(N + 1), indexing="ij")
    return phi, np.maximum(a, b).ravel()


def hierarchical_projections(
    U: np.ndarray, J: np.ndarray, ops: ReferenceOperators
) -> List[np.ndarray]:
    """``[P^0 U, ..., P^N U]``: metric-weighted L2 projections onto ``Q_k``."""
    E = U.shape[0]
    n2 = ops.n**2
    phi, mode_degree = _legendre_modes(ops)
    w = _weighted_jacobian(J, ops).reshape(E, n2)
    u = U.reshape(E, n2, 4)
    out = []
    for k in range(ops.degree):
        basis = phi[:, mode_degree <= k]
        gram = np.einsum("pa,ep,pb->eab", basis, w, basis)
        rhs = np.einsum("pa,ep,epc->eac", basis, w, u)
        coef = np.linalg.solve(gram, rhs)
        out.append(np.einsum("pa,eac->epc", basis, coef).reshape(U.shape))
    out.append(U)
    return out


def apply_oe(
    U: np.ndarray,
    delta: np.ndarray,
    dt: float,
    s: float,
    J: np.ndarray,
    ops: ReferenceOperators,
) -> np.ndarray:
    """Damp each hierarchical increment by ``exp(-s dt sum_{m<=k} delta_m)``."""
    projections = hierarchical_projections(U, J, ops)
    exponents = np.cumsum(delta, axis=1)
    out = projections[0].copy()
    for k in range(1, ops.degree + 1):
        factor = np.exp(-s * dt * exponents[:, k])[:, None, None, None]
        out += factor * (projections[k] - projections[k - 1])
    return out


def apply_selective_oe(
    arrays: MeshArrays,
    U: np.ndarray,
    cfg: OEConfig,
    dt: float,
    ops: ReferenceOperators,
    gas: GasModel = DEFAULT_GAS,
) -> Tuple[np.ndarray, LimiterReport]:
    """Apply OE only where the jump indicator exceeds ``cfg.c_oe``.

    Untroubled elements are returned bit-identical.
    """
    E = U.shape[0]
    indicator = shock_indicator(arrays, U, ops, gas)
    troubled = indicator > cfg.c_oe
    report = LimiterReport(
        theta=np.ones(E),
        indicator=indicator,
        troubled=troubled,
        delta=np.zeros((E, ops.n)),
    )
    if not cfg.enabled:
        report.troubled = np.zeros(E, dtype=bool)
        return U, report
    if not np.any(troubled):
        return U, report

    delta = oe_damping(arrays, U, ops, gas)
    out = U.copy()
    out[troubled] = apply_oe(
        U[troubled], delta[troubled], dt, cfg.s, arrays.J[troubled], ops
    )
    report.delta[troubled] = delta[troubled]
    logger.debug("OE applied on %d troubled elements", report.n_troubled)
    return out, report
