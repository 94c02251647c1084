"""L2 errors against exact solutions and the vortex convergence study."""

from typing import Iterable, List, Optional, Sequence

import numpy as np

from ..cases.base import ExactSolution
from ..config import Settings
from ..exceptions import ConfigurationError
from ..mesh.topology import MeshTopology
from ..numerics.reference_ops import ReferenceOperators
from ..schemas.run_config import CaseName, FluxMode, RunConfig, vortex_time_step
from ..utils.logger import get_logger
from .output_writer import ConvergenceRow
from .simulation_service import run_simulation

logger = get_logger(__name__)


def compute_l2_error(
    mesh: MeshTopology,
    U: np.ndarray,
    exact: Optional[ExactSolution],
    t: float,
    ops: ReferenceOperators,
) -> np.ndarray:
    """``sqrt(sum w_i w_j J_ij (U_ij - U_exact(x_ij, t))^2)`` per component.

    Raises:
        ConfigurationError: If no exact solution is available.
    """
    if exact is None:
        raise ConfigurationError("No exact solution attached to this case")
    arrays = mesh.arrays()
    xy = arrays.geometry
    diff = U - exact(xy[..., 0], xy[..., 1], t)
    return np.sqrt(np.einsum("ij,eij,eijc->c", ops.weights_2d, arrays.J, diff * diff))


def convergence_rates(
    errors: Sequence[np.ndarray],
) -> List[Optional[List[Optional[float]]]]:
    """``log2(e_{l-1} / e_l)`` per component; ``None`` for the first level."""
    rates: List[Optional[List[Optional[float]]]] = [None]
    for prev, cur in zip(errors[:-1], errors[1:]):
        level_rates: List[Optional[float]] = []
        for a, b in zip(prev, cur):
            level_rates.append(float(np.log2(a / b)) if a > 0 and b > 0 else None)
        rates.append(level_rates)
    return rates


def run_convergence_study(
    base: RunConfig,
    levels: Iterable[int],
    degrees: Iterable[int],
    modes: Iterable[FluxMode],
    settings: Optional[Settings] = None,
) -> List[ConvergenceRow]:
    """Run the vortex on uniformly refined meshes and tabulate errors and rates.

    Each level uses the fixed step ``0.2 / (20 * 2**level)``.
    """
    if CaseName(base.case) is not CaseName.VORTEX:
        raise ConfigurationError("Convergence study requires the vortex case")
    levels = list(levels)
    rows: List[ConvergenceRow] = []
    for mode in modes:
        for degree in degrees:
            errors = []
            counts = []
            for level in levels:
                cfg = base.model_copy(
                    update={
                        "degree": degree,
                        "flux": FluxMode(mode),
                        "uniform_levels": level,
                        "step": base.step.model_copy(
                            update={"fixed_dt": vortex_time_step(level)}
                        ),
                    }
                )
                result = run_simulation(cfg, settings=settings, write=False)
                err = compute_l2_error(
                    result.mesh, result.U, result.case.exact, result.t, result.ops
                )
                errors.append(err)
                counts.append(result.mesh.n_active)
                logger.info(
                    "Convergence N=%d flux=%s level=%d rho_error=%.6e",
                    degree,
                    FluxMode(mode).value,
                    level,
                    err[0],
                )
            for level, err, count, rates in zip(
                levels, errors, counts, convergence_rates(errors)
            ):
                rows.append(
                    ConvergenceRow(
                        level=level,
                        degree=degree,
                        flux=FluxMode(mode).value,
                        n_elements=count,
                        errors=err,
                        rates=rates,
                    )
                )
    return rows
