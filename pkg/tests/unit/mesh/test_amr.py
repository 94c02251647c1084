"""Test indicator-driven adaptation and solution transfer."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dgsem_amr.mesh.amr import Marks, adapt_mesh, mark_elements, transfer_solution
from dgsem_amr.mesh.geometry import restrict_to_child, vortex_warp
from dgsem_amr.mesh.topology import (
    CHILD_OFFSETS,
    MeshTopology,
    apply_warp,
    build_cartesian,
)
from dgsem_amr.numerics.euler import is_admissible, to_conservative
from dgsem_amr.schemas.run_config import AmrConfig


def smooth_state(mesh: MeshTopology, gas) -> np.ndarray:
    """Smooth admissible field sampled at the active nodes."""
    xy = mesh.arrays().geometry
    x, y = xy[..., 0], xy[..., 1]
    k = 2.0 * np.pi / 20.0
    return to_conservative(
        1.0 + 0.2 * np.sin(k * x) * np.cos(k * y),
        0.3 + 0.1 * np.cos(k * y),
        -0.2 + 0.1 * np.sin(k * x),
        1.0 + 0.1 * np.cos(k * (x + y)),
        gas,
    )


def integral(mesh: MeshTopology, U: np.ndarray) -> np.ndarray:
    J = mesh.arrays().J
    return np.einsum("ij,eij,eijc->c", mesh.ops.weights_2d, J, U)


@pytest.fixture
def warped_square(ops2) -> MeshTopology:
    """Periodic 2 x 2 warped mesh with no hanging nodes."""
    mesh = build_cartesian(2, 2, (0.0, 20.0, 0.0, 20.0), (True, True), ops2)
    return apply_warp(mesh, vortex_warp())


class TestMarkElements:
    """Test mark_elements function."""

    @staticmethod
    def ramp_field(ops2, gas) -> np.ndarray:
        """Density ramp on element 0 meeting a constant state on element 1."""
        n = ops2.n
        rho = np.full((2, n, n), 3.0)
        rho[0] = 1.0 + 0.5 * ops2.nodes[:, None]
        return to_conservative(rho, 0.0, 0.0, 1.0, gas)

    def test_refines_element_with_jump(self, ops2, gas):
        """A face jump on a nonconstant element drives refinement."""
        mesh = build_cartesian(2, 1, (0.0, 2.0, 0.0, 1.0), (False, False), ops2)
        marks = mark_elements(
            mesh, self.ramp_field(ops2, gas), AmrConfig(max_level=1), ops2, gas
        )
        first, second = mesh.active
        assert marks.indicator[first] == pytest.approx(0.5, rel=1e-12)
        assert marks.indicator[second] == 0.0
        assert marks.refine == {first}

    def test_respects_max_level(self, ops2, gas):
        """Elements already at max_level are not marked."""
        mesh = build_cartesian(2, 1, (0.0, 2.0, 0.0, 1.0), (False, False), ops2)
        marks = mark_elements(
            mesh, self.ramp_field(ops2, gas), AmrConfig(max_level=0), ops2, gas
        )
        assert not marks.refine

    def test_marks_smooth_siblings_for_coarsening(self, ops1, gas):
        """Four constant children of one parent are merged."""
        mesh = build_cartesian(1, 1, (0.0, 1.0, 0.0, 1.0), (False, False), ops1)
        root = mesh.active[0]
        mesh.refine([root])
        U = to_conservative(np.ones((4, ops1.n, ops1.n)), 0.5, -0.5, 1.0, gas)
        marks = mark_elements(mesh, U, AmrConfig(max_level=2), ops1, gas)
        assert marks.coarsen == {root}
        assert not marks.refine


class TestAdaptMesh:
    """Test adapt_mesh function."""

    def test_empty_marks_is_identity(self, unit_square_mesh):
        """No marks leave the mesh and plan untouched."""
        before = list(unit_square_mesh.active)
        _, plan = adapt_mesh(unit_square_mesh, Marks())
        assert plan.is_identity
        assert unit_square_mesh.active == before

    def test_balance_forces_neighbor_refinement(self, ops1):
        """Refining next to a coarse element propagates a split."""
        mesh = build_cartesian(2, 1, (0.0, 2.0, 0.0, 1.0), (False, False), ops1)
        left, right = mesh.active
        children = mesh.refine([left])[left]
        _, plan = adapt_mesh(mesh, Marks(refine={children[1]}))
        assert plan.n_refined == 2
        assert not mesh.elements[right].active
        mesh.check_balance()

    def test_coarsening_blocked_by_balance(self, ops1):
        """A parent is kept split if merging would break 2:1 balance."""
        mesh = build_cartesian(2, 1, (0.0, 2.0, 0.0, 1.0), (False, False), ops1)
        left, right = mesh.active
        children = mesh.refine([left])[left]
        adapt_mesh(mesh, Marks(refine={children[1]}))
        _, plan = adapt_mesh(mesh, Marks(coarsen={right}))
        assert plan.n_coarsened == 0
        assert not mesh.elements[right].active

    def test_coarsening_merges_siblings(self, unit_square_mesh):
        """Eligible sibling groups merge back into their parent."""
        parent = unit_square_mesh.active[0]
        unit_square_mesh.refine([parent])
        _, plan = adapt_mesh(unit_square_mesh, Marks(coarsen={parent}))
        assert plan.n_coarsened == 1
        assert unit_square_mesh.n_active == 4


class TestTransferSolution:
    """Test transfer_solution function."""

    def test_constant_state_preserved(self, warped_square, gas):
        """Refinement and coarsening keep a constant state on curved elements."""
        state = to_conservative(1.2, 0.3, -0.4, 0.9, gas)
        U = np.broadcast_to(state, warped_square.arrays().geometry.shape[:3] + (4,))
        old_ids = warped_square.arrays().ids
        _, plan = adapt_mesh(warped_square, Marks(refine={warped_square.active[0]}))
        U_new = transfer_solution(
            plan, old_ids, U.copy(), warped_square, warped_square.ops
        )
        assert U_new.shape[0] == 7
        assert_allclose(U_new, np.broadcast_to(state, U_new.shape), atol=1e-13)

    def test_refinement_conserves_integrals(self, warped_square, gas):
        """Refinement preserves the metric-weighted integral of every component."""
        U = smooth_state(warped_square, gas)
        before = integral(warped_square, U)
        old_ids = warped_square.arrays().ids
        _, plan = adapt_mesh(warped_square, Marks(refine=set(warped_square.active)))
        U_new = transfer_solution(plan, old_ids, U, warped_square, warped_square.ops)
        assert_allclose(integral(warped_square, U_new), before, rtol=1e-12, atol=1e-12)

    def test_refine_then_coarsen_round_trip(self, warped_square, gas):
        """Coarsening undoes refinement on smooth data."""
        U = smooth_state(warped_square, gas)
        parents = list(warped_square.active)
        ids = warped_square.arrays().ids
        _, plan = adapt_mesh(warped_square, Marks(refine=set(parents)))
        fine = transfer_solution(plan, ids, U, warped_square, warped_square.ops)
        fine_ids = warped_square.arrays().ids
        before = integral(warped_square, fine)
        _, plan = adapt_mesh(warped_square, Marks(coarsen=set(parents)))
        coarse = transfer_solution(
            plan, fine_ids, fine, warped_square, warped_square.ops
        )
        assert warped_square.active == parents
        assert_allclose(coarse, U, rtol=1e-10, atol=1e-10)
        assert_allclose(integral(warped_square, coarse), before, rtol=1e-12, atol=1e-12)

    def test_coarsening_discontinuous_children_conserves(self, warped_square, gas):
        """Projection of piecewise-constant children keeps curved integrals."""
        parents = list(warped_square.active)
        U = smooth_state(warped_square, gas)
        ids = warped_square.arrays().ids
        _, plan = adapt_mesh(warped_square, Marks(refine=set(parents)))
        transfer_solution(plan, ids, U, warped_square, warped_square.ops)
        fine_ids = warped_square.arrays().ids
        states = [
            to_conservative(1.0, 0.0, 0.0, 1.0, gas),
            to_conservative(0.125, 0.5, 0.0, 0.1, gas),
            to_conservative(2.0, -0.3, 0.4, 3.0, gas),
            to_conservative(0.5, 0.0, -1.0, 0.4, gas),
        ]
        n = warped_square.ops.n
        fine = np.stack([np.broadcast_to(states[i % 4], (n, n, 4)) for i in range(16)])
        before = integral(warped_square, fine)
        _, plan = adapt_mesh(warped_square, Marks(coarsen=set(parents)))
        coarse = transfer_solution(
            plan, fine_ids, fine, warped_square, warped_square.ops, gas
        )
        assert_allclose(integral(warped_square, coarse), before, rtol=1e-12, atol=1e-12)
        assert np.all(is_admissible(coarse, gas))

    def test_affine_refinement_is_restriction(self, ops2, gas):
        """Without curvature the conservation constant vanishes."""
        mesh = build_cartesian(2, 2, (0.0, 20.0, 0.0, 20.0), (True, True), ops2)
        U = smooth_state(mesh, gas)
        ids = mesh.arrays().ids
        parent = mesh.active[0]
        _, plan = adapt_mesh(mesh, Marks(refine={parent}))
        U_new = transfer_solution(plan, ids, U, mesh, ops2, gas)
        new_ids = list(mesh.arrays().ids)
        entry = plan.entries[0]
        for cid, (cx, cy) in zip(entry.children, CHILD_OFFSETS):
            expected = restrict_to_child(U[0], cx, cy, ops2)
            assert_allclose(U_new[new_ids.index(cid)], expected, atol=1e-13)
