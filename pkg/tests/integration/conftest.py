"""Integration test fixtures and configuration.

Builds complete discretizations on top of the mesh and operator fixtures of
the main conftest.py.
"""

from typing import Optional

import numpy as np
import pytest

from dgsem_amr.cases import vortex_exact
from dgsem_amr.config import Settings
from dgsem_amr.mesh.topology import MeshTopology
from dgsem_amr.numerics.dgsem import Discretization
from dgsem_amr.numerics.euler import DEFAULT_GAS
from dgsem_amr.numerics.timestepping import StageOptions, compute_dt, ssprk3_step
from dgsem_amr.schemas.run_config import FluxMode, OEConfig, StepConfig

from ..conftest import make_warped_checkerboard


def vortex_field(mesh: MeshTopology) -> np.ndarray:
    """Vortex initial data sampled on the active nodes of ``mesh``."""
    xy = mesh.arrays().geometry
    return vortex_exact(xy[..., 0], xy[..., 1], 0.0)


def advance(
    disc: Discretization,
    U: np.ndarray,
    steps: int,
    cfl: float = 0.5,
    options: Optional[StageOptions] = None,
) -> np.ndarray:
    """Take ``steps`` CFL-limited SSPRK3 steps starting at t = 0."""
    options = options or StageOptions(oe=OEConfig())
    t = 0.0
    for _ in range(steps):
        dt = compute_dt(disc.arrays, U, StepConfig(cfl=cfl), disc.ops, disc.gas)
        U, _ = ssprk3_step(disc, U, dt, t, options)
        t += dt
    return U


@pytest.fixture(params=[FluxMode.ES, FluxMode.MORTAR], ids=["es", "mortar"])
def flux_mode(request) -> FluxMode:
    """Both treatments of nonconforming interfaces."""
    return request.param


@pytest.fixture
def checkerboard_disc(ops3, flux_mode) -> Discretization:
    """N = 3 discretization on the warped periodic 4 x 4 checkerboard."""
    mesh = make_warped_checkerboard(ops3)
    return Discretization(mesh, ops3, flux_mode, {}, DEFAULT_GAS)


@pytest.fixture
def quiet_settings(tmp_path) -> Settings:
    return Settings(output_dir=str(tmp_path / "output"), log_level="WARNING")
