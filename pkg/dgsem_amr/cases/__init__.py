"""Benchmark cases and their mesh and initial-data setup."""

from typing import Callable, Dict, Tuple

import numpy as np

from ..exceptions import ConfigurationError
from ..mesh.topology import (
    MeshTopology,
    apply_warp,
    build_cartesian,
    checkerboard_refine,
    uniform_refine,
)
from ..numerics.euler import GasModel, require_admissible
from ..numerics.reference_ops import ReferenceOperators, get_operators
from ..schemas.run_config import CaseName, RunConfig
from ..utils.logger import get_logger
from .base import CaseSetup, ExactSolution, InitialCondition
from .double_mach import double_mach_case
from .jet import jet_case
from .vortex import vortex_case, vortex_exact

logger = get_logger(__name__)

CASE_BUILDERS: Dict[CaseName, Callable[[GasModel], CaseSetup]] = {
    CaseName.VORTEX: vortex_case,
    CaseName.DMR: double_mach_case,
    CaseName.JET: jet_case,
}


def get_case(name: "CaseName | str", gas: GasModel) -> CaseSetup:
    """Return the case description for ``name``.

    Raises:
        ConfigurationError: If the case is unknown.
    """
    try:
        builder = CASE_BUILDERS[CaseName(name)]
    except (ValueError, KeyError):
        raise ConfigurationError(f"Unknown case '{name}'") from None
    return builder(gas)


def build_case_mesh(
    case: CaseSetup, cfg: RunConfig, ops: ReferenceOperators
) -> MeshTopology:
    """Base mesh, optional checkerboard and warp, then uniform refinements."""
    mesh = build_cartesian(cfg.nx, cfg.ny, case.bounds, case.periodic, ops)
    if case.checkerboard:
        checkerboard_refine(mesh)
    if case.warp is not None:
        apply_warp(mesh, case.warp)
    if cfg.uniform_levels:
        uniform_refine(mesh, cfg.uniform_levels)
    return mesh


def sample_initial_condition(
    case: CaseSetup, mesh: MeshTopology, gas: GasModel
) -> np.ndarray:
    """Evaluate the initial condition at every active node.

    Raises:
        InadmissibleStateError: If a sampled state is inadmissible.
    """
    xy = mesh.arrays().geometry
    U = np.asarray(case.initial_condition(xy[..., 0], xy[..., 1]), dtype=float)
    require_admissible(U, gas, f"{case.name} initial condition")
    return U


def setup_case(
    cfg: RunConfig, gas: GasModel
) -> Tuple[CaseSetup, MeshTopology, np.ndarray]:
    """Build the case, its mesh and the nodal initial field."""
    case = get_case(cfg.case, gas)
    ops = get_operators(cfg.degree)
    mesh = build_case_mesh(case, cfg, ops)
    U = sample_initial_condition(case, mesh, gas)
    logger.info(
        "Case %s: N=%d flux=%s elements=%d bounds=%s",
        case.name,
        cfg.degree,
        cfg.flux.value,
        mesh.n_active,
        case.bounds,
    )
    return case, mesh, U


__all__ = [
    "CASE_BUILDERS",
    "CaseSetup",
    "ExactSolution",
    "InitialCondition",
    "build_case_mesh",
    "double_mach_case",
    "get_case",
    "jet_case",
    "sample_initial_condition",
    "setup_case",
    "vortex_case",
    "vortex_exact",
]
