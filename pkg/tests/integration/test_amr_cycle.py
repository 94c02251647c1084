"""Refine, advance and coarsen a vortex on the periodic checkerboard."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dgsem_amr.mesh.amr import Marks, adapt_mesh, transfer_solution
from dgsem_amr.numerics.dgsem import Discretization
from dgsem_amr.numerics.euler import DEFAULT_GAS, pressure
from dgsem_amr.numerics.limiters import shock_indicator
from dgsem_amr.numerics.timestepping import conserved_totals

from ..conftest import make_warped_checkerboard
from .conftest import advance, vortex_field

pytestmark = pytest.mark.integration


def adapt(disc: Discretization, U: np.ndarray, marks: Marks):
    old_ids = disc.arrays.ids.copy()
    mesh, plan = adapt_mesh(disc.mesh, marks)
    U = transfer_solution(plan, old_ids, U, mesh, disc.ops, disc.gas, disc.eps)
    return U, plan


@pytest.fixture
def vortex_disc(ops2, flux_mode) -> Discretization:
    return Discretization(make_warped_checkerboard(ops2), ops2, flux_mode, {})


class TestAmrCycle:
    """Conservation and admissibility through refinement and coarsening."""

    def test_cycle_conserves_totals(self, vortex_disc):
        ops = vortex_disc.ops
        U = vortex_field(vortex_disc.mesh)
        before = conserved_totals(vortex_disc.arrays, U, ops)

        indicator = shock_indicator(vortex_disc.arrays, U, ops, DEFAULT_GAS)
        ids = vortex_disc.arrays.ids
        targets = {int(ids[i]) for i in np.argsort(indicator)[-3:]}
        U, plan = adapt(vortex_disc, U, Marks(refine=targets))
        assert plan.n_refined >= 3
        vortex_disc.mesh.check_balance()
        assert_allclose(
            conserved_totals(vortex_disc.arrays, U, ops), before, rtol=1e-12, atol=1e-11
        )

        U = advance(vortex_disc, U, steps=3)
        U, plan = adapt(vortex_disc, U, Marks(coarsen=targets))
        vortex_disc.mesh.check_balance()
        assert_allclose(
            conserved_totals(vortex_disc.arrays, U, ops), before, rtol=1e-11, atol=1e-10
        )
        assert U.shape[0] == vortex_disc.mesh.n_active
        assert U[..., 0].min() > 0.0
        assert pressure(U, DEFAULT_GAS).min() > 0.0

    def test_refined_mesh_preserves_free_stream(self, vortex_disc):
        arrays = vortex_disc.arrays
        U = np.broadcast_to([1.0, 0.5, 0.5, 3.0], arrays.J.shape + (4,)).copy()
        U, _ = adapt(vortex_disc, U, Marks(refine={int(arrays.ids[0])}))
        U1 = advance(vortex_disc, U, steps=5)
        assert_allclose(U1, U, rtol=0.0, atol=1e-10)
