"""End-to-end properties of the scheme on the warped nonconforming mesh."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dgsem_amr.numerics.dgsem import Discretization, entropy_rate
from dgsem_amr.numerics.euler import DEFAULT_GAS, pressure, to_conservative
from dgsem_amr.numerics.timestepping import conserved_totals
from dgsem_amr.schemas.run_config import FluxMode

from ..conftest import make_warped_checkerboard, sample_states
from .conftest import advance, vortex_field

pytestmark = pytest.mark.integration


class TestFreeStream:
    """A uniform flow stays uniform on curved, nonconforming elements."""

    def test_uniform_flow_preserved(self, checkerboard_disc):
        arrays = checkerboard_disc.arrays
        state = to_conservative(1.2, 0.3, -0.2, 0.9, checkerboard_disc.gas)
        U0 = np.broadcast_to(state, arrays.J.shape + (4,)).copy()
        U = advance(checkerboard_disc, U0, steps=10)
        assert_allclose(U, U0, rtol=0.0, atol=1e-10)


class TestVortexTransport:
    """Smooth vortex advection over a few steps."""

    def test_conservation(self, checkerboard_disc):
        arrays = checkerboard_disc.arrays
        ops = checkerboard_disc.ops
        U0 = vortex_field(checkerboard_disc.mesh)
        before = conserved_totals(arrays, U0, ops)
        U = advance(checkerboard_disc, U0, steps=5)
        after = conserved_totals(arrays, U, ops)
        assert_allclose(after, before, rtol=1e-12, atol=1e-10)

    def test_long_run_conservation(self, checkerboard_disc):
        """One hundred limited, filtered steps keep every total to round-off."""
        disc = checkerboard_disc
        U0 = vortex_field(disc.mesh)
        before = conserved_totals(disc.arrays, U0, disc.ops)
        scale = conserved_totals(disc.arrays, np.abs(U0), disc.ops)
        U = advance(disc, U0, steps=100)
        after = conserved_totals(disc.arrays, U, disc.ops)
        assert np.all(np.abs(after - before) <= 1e-11 * scale)

    def test_state_stays_admissible(self, checkerboard_disc):
        U = advance(checkerboard_disc, vortex_field(checkerboard_disc.mesh), steps=5)
        assert U[..., 0].min() > 0.0
        assert pressure(U, checkerboard_disc.gas).min() > 0.0
        assert np.isfinite(U).all()

    def test_short_run_stays_near_initial_data(self, checkerboard_disc):
        """Five small steps stay close to the initial data."""
        U0 = vortex_field(checkerboard_disc.mesh)
        U = advance(checkerboard_disc, U0, steps=5, cfl=0.2)
        assert np.abs(U - U0).max() < 0.1


class TestEntropyStability:
    """Semi-discrete entropy behavior of the ES interface treatment."""

    def test_entropy_rate_nonpositive(self, checkerboard_disc):
        if checkerboard_disc.mode is not FluxMode.ES:
            pytest.skip("entropy stability holds for the ES interface treatment")
        U = vortex_field(checkerboard_disc.mesh)
        rhs = checkerboard_disc.rhs(U, 0.0)
        disc = checkerboard_disc
        rate = entropy_rate(disc.arrays, U, rhs, disc.ops, disc.gas)
        assert rate <= 1e-10

    def test_random_fields_produce_no_entropy(self, ops3, rng):
        """Arbitrary admissible nodal data never gains entropy in ES mode."""
        mesh = make_warped_checkerboard(ops3)
        disc = Discretization(mesh, ops3, FluxMode.ES, {}, DEFAULT_GAS)
        rates = []
        for _ in range(50):
            U = sample_states(rng, disc.arrays.J.shape, disc.gas)
            rhs = disc.rhs(U, 0.0)
            rates.append(entropy_rate(disc.arrays, U, rhs, disc.ops, disc.gas))
        assert max(rates) <= 1e-11
