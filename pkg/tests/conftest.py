"""Shared test fixtures and configuration.

This module provides common fixtures used across all test modules.
Fixtures are organized by scope and purpose.
"""

import numpy as np
import pytest

from dgsem_amr.config import Settings
from dgsem_amr.mesh.geometry import vortex_warp
from dgsem_amr.mesh.topology import (
    MeshTopology,
    apply_warp,
    build_cartesian,
    checkerboard_refine,
)
from dgsem_amr.numerics.euler import DEFAULT_GAS, GasModel, to_conservative
from dgsem_amr.numerics.reference_ops import ReferenceOperators, get_operators

# =============================================================================
# Numerical Fixtures
# =============================================================================


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded random generator for reproducible sampled states."""
    return np.random.default_rng(20240611)


@pytest.fixture
def gas() -> GasModel:
    """Default gamma = 1.4 gas."""
    return DEFAULT_GAS


@pytest.fixture
def ops1() -> ReferenceOperators:
    """Degree 1 reference operators."""
    return get_operators(1)


@pytest.fixture
def ops2() -> ReferenceOperators:
    """Degree 2 reference operators."""
    return get_operators(2)


@pytest.fixture
def ops3() -> ReferenceOperators:
    """Degree 3 reference operators."""
    return get_operators(3)


def sample_states(rng: np.random.Generator, shape: tuple, gas: GasModel = DEFAULT_GAS):
    """Admissible conserved states with moderate density, velocity and pressure."""
    rho = rng.uniform(0.5, 2.0, shape)
    u = rng.uniform(-1.0, 1.0, shape)
    v = rng.uniform(-1.0, 1.0, shape)
    p = rng.uniform(0.5, 2.0, shape)
    return to_conservative(rho, u, v, p, gas)


@pytest.fixture
def random_states(rng):
    """Factory for admissible random states of a given leading shape."""

    def factory(*shape: int) -> np.ndarray:
        return sample_states(rng, shape)

    return factory


# =============================================================================
# Mesh Fixtures
# =============================================================================


def make_warped_checkerboard(
    ops: ReferenceOperators, n: int = 4, length: float = 20.0
) -> MeshTopology:
    """Periodic ``n x n`` checkerboard on ``[-L/2, L/2]^2`` with the vortex warp."""
    half = 0.5 * length
    mesh = build_cartesian(n, n, (-half, half, -half, half), (True, True), ops)
    checkerboard_refine(mesh)
    apply_warp(mesh, vortex_warp(length, 0.05))
    return mesh


@pytest.fixture
def warped_mesh2(ops2) -> MeshTopology:
    """Warped periodic checkerboard with N = 2."""
    return make_warped_checkerboard(ops2)


@pytest.fixture
def warped_mesh3(ops3) -> MeshTopology:
    """Warped periodic checkerboard with N = 3."""
    return make_warped_checkerboard(ops3)


@pytest.fixture
def unit_square_mesh(ops2) -> MeshTopology:
    """Non-periodic 2 x 2 mesh of the unit square."""
    return build_cartesian(2, 2, (0.0, 1.0, 0.0, 1.0), (False, False), ops2)


# =============================================================================
# Settings Fixtures
# =============================================================================


@pytest.fixture
def test_settings(tmp_path) -> Settings:
    """Settings writing into a temporary output directory."""
    return Settings(output_dir=str(tmp_path / "output"), log_level="WARNING")
