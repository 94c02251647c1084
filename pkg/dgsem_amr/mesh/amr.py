"""Indicator-driven refinement and coarsening with 2:1 balance.

Adaptation mutates the ``MeshTopology`` in place and records a transfer plan;
``transfer_solution`` replays the plan on the old nodal field to produce the
field on the new active ordering.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Set, Tuple, Union

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ..numerics.euler import DEFAULT_GAS, GasModel, is_admissible
from ..numerics.limiters import shock_indicator, zhang_shu_limit
from ..numerics.reference_ops import ReferenceOperators
from ..schemas.run_config import AmrConfig
from ..utils.logger import get_logger
from .geometry import restrict_to_child
from .topology import CHILD_OFFSETS, MeshTopology

logger = get_logger(__name__)

DEFAULT_EPS = 1e-13


@dataclass
class Marks:
    """Refinement targets and parents whose four children should merge."""

    refine: Set[int] = field(default_factory=set)
    coarsen: Set[int] = field(default_factory=set)
    indicator: Dict[int, float] = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return not self.refine and not self.coarsen


@dataclass
class RefineEntry:
    parent: int
    children: Tuple[int, int, int, int]
    parent_jacobian: np.ndarray
    child_jacobians: np.ndarray  # (4, n, n)


@dataclass
class CoarsenEntry:
    parent: int
    children: Tuple[int, int, int, int]
    parent_jacobian: np.ndarray
    child_jacobians: np.ndarray  # (4, n, n)


TransferEntry = Union[RefineEntry, CoarsenEntry]


@dataclass
class TransferPlan:
    """Ordered refine/coarsen operations applied by one adaptation."""

    entries: List[TransferEntry] = field(default_factory=list)

    @property
    def n_refined(self) -> int:
        return sum(isinstance(e, RefineEntry) for e in self.entries)

    @property
    def n_coarsened(self) -> int:
        return sum(isinstance(e, CoarsenEntry) for e in self.entries)

    @property
    def is_identity(self) -> bool:
        return not self.entries


def mark_elements(
    mesh: MeshTopology,
    U: np.ndarray,
    cfg: AmrConfig,
    ops: ReferenceOperators,
    gas: GasModel = DEFAULT_GAS,
) -> Marks:
    """Mark elements from the jump indicator.

    Refine where ``I > c_ref`` below ``max_level``. A parent is marked for
    coarsening only when all four children are active leaves with
    ``I < c_crs`` and none of them is marked for refinement.
    """
    arrays = mesh.arrays()
    indicator = shock_indicator(arrays, U, ops, gas)
    values = {int(e): float(v) for e, v in zip(arrays.ids, indicator)}
    marks = Marks(indicator=values)
    for eid, value in values.items():
        if value > cfg.c_ref and mesh.elements[eid].level < cfg.max_level:
            marks.refine.add(eid)

    candidates = {e for e, v in values.items() if v < cfg.c_crs}
    seen: Set[int] = set()
    for eid in candidates:
        parent = mesh.elements[eid].parent
        if parent is None or parent in seen:
            continue
        seen.add(parent)
        children = mesh.elements[parent].children
        if children is None:
            continue
        if all(
            c in candidates and c not in marks.refine and mesh.elements[c].active
            for c in children
        ):
            marks.coarsen.add(parent)
    return marks


def _covering_leaf(mesh: MeshTopology, key: Tuple[int, int, int]) -> Union[int, None]:
    """Active leaf at ``key`` or at one of its ancestors."""
    level, I, J = key
    while level >= 0:
        eid = mesh.leaf((level, I, J))
        if eid is not None:
            return eid
        level, I, J = level - 1, I >> 1, J >> 1
    return None


def _balance_violators(mesh: MeshTopology) -> Set[int]:
    """Active leaves two or more levels coarser than an adjacent leaf."""
    violators: Set[int] = set()
    for eid in mesh.active:
        elem = mesh.elements[eid]
        for side in range(4):
            nkey = mesh.neighbor_key(elem.key, side)
            if nkey is None:
                continue
            leaf = _covering_leaf(mesh, nkey)
            if leaf is not None and mesh.elements[leaf].level <= elem.level - 2:
                violators.add(leaf)
    return violators


def _coarsening_keeps_balance(mesh: MeshTopology, parent_id: int) -> bool:
    parent = mesh.elements[parent_id]
    for side in range(4):
        nkey = mesh.neighbor_key(parent.key, side)
        if nkey is None:
            continue
        finest = mesh.finest_level_in(nkey)
        if finest is not None and finest >= parent.level + 2:
            return False
    return True


def _refine_with_plan(mesh: MeshTopology, ids: List[int], plan: TransferPlan) -> None:
    parent_j = {e: mesh.elements[e].jacobian for e in ids}
    created = mesh.refine(ids)
    for pid, children in created.items():
        plan.entries.append(
            RefineEntry(
                parent=pid,
                children=children,
                parent_jacobian=parent_j[pid],
                child_jacobians=np.stack([mesh.elements[c].jacobian for c in children]),
            )
        )


def adapt_mesh(mesh: MeshTopology, marks: Marks) -> Tuple[MeshTopology, TransferPlan]:
    """Refine, restore 2:1 balance, then coarsen eligible sibling groups.

    The mesh is modified in place and returned with the transfer plan.
    """
    plan = TransferPlan()
    if marks.empty:
        return mesh, plan

    targets = [e for e in mesh.active if e in marks.refine]
    if targets:
        _refine_with_plan(mesh, targets, plan)
    forced = 0
    violators = _balance_violators(mesh)
    while violators:
        forced += len(violators)
        _refine_with_plan(mesh, [e for e in mesh.active if e in violators], plan)
        violators = _balance_violators(mesh)

    merge = []
    for pid in sorted(marks.coarsen):
        parent = mesh.elements.get(pid)
        if parent is None or parent.children is None:
            continue
        if not all(mesh.elements[c].active for c in parent.children):
            continue
        if _coarsening_keeps_balance(mesh, pid):
            merge.append(pid)
    if merge:
        child_j = {
            pid: np.stack(
                [mesh.elements[c].jacobian for c in mesh.elements[pid].children]
            )
            for pid in merge
        }
        removed = mesh.coarsen(merge)
        for pid, children in removed.items():
            plan.entries.append(
                CoarsenEntry(
                    parent=pid,
                    children=children,
                    parent_jacobian=mesh.elements[pid].jacobian,
                    child_jacobians=child_j[pid],
                )
            )
    mesh.check_balance()
    logger.info(
        "Adapted mesh: refined=%d (balance=%d) coarsened=%d active=%d",
        plan.n_refined,
        forced,
        plan.n_coarsened,
        mesh.n_active,
    )
    return mesh, plan


def _integral(U: np.ndarray, J: np.ndarray, ops: ReferenceOperators) -> np.ndarray:
    per = np.einsum("ij,...ij,...ijc->...c", ops.weights_2d, J, U)
    return per.reshape(-1, per.shape[-1]).sum(axis=0)


def _limit_element(
    U: np.ndarray,
    J: np.ndarray,
    ops: ReferenceOperators,
    gas: GasModel,
    eps: float,
    element: int,
    context: str,
) -> np.ndarray:
    ids = np.asarray([element])
    limited, _ = zhang_shu_limit(U, J, ops, gas, eps, element_ids=ids, context=context)
    return limited


def refine_transfer(
    U_parent: np.ndarray,
    entry: RefineEntry,
    ops: ReferenceOperators,
    gas: GasModel = DEFAULT_GAS,
    eps: float = DEFAULT_EPS,
) -> np.ndarray:
    """Limit the parent, then evaluate its polynomial at each child's nodes.

    A constant correction makes the children's integrals sum to the parent's
    on curved elements. Returns ``(4, n, n, 4)``.
    """
    parent = _limit_element(
        U_parent, entry.parent_jacobian, ops, gas, eps, entry.parent, "refine_parent"
    )
    children = np.stack(
        [restrict_to_child(parent, cx, cy, ops) for cx, cy in CHILD_OFFSETS]
    )
    area = np.einsum("ij,kij->", ops.weights_2d, entry.child_jacobians)
    mismatch = _integral(parent, entry.parent_jacobian, ops) - _integral(
        children, entry.child_jacobians, ops
    )
    children = children + mismatch / area
    for k, cid in enumerate(entry.children):
        if not np.all(is_admissible(children[k], gas)):
            children[k] = _limit_element(
                children[k],
                entry.child_jacobians[k],
                ops,
                gas,
                eps,
                cid,
                "refine_child",
            )
    return children


def _child_basis(ops: ReferenceOperators) -> np.ndarray:
    """Parent nodal basis at every child node, ``(4, n, n, n, n)``.

    Axes are ``(k, i, j, a, b)``: child, child node, parent node.
    """
    P = ops.interp
    return np.stack(
        [np.einsum("ia,jb->ijab", P[cx], P[cy]) for cx, cy in CHILD_OFFSETS]
    )


def coarsen_transfer(
    U_children: np.ndarray,
    entry: CoarsenEntry,
    ops: ReferenceOperators,
    gas: GasModel = DEFAULT_GAS,
    eps: float = DEFAULT_EPS,
) -> np.ndarray:
    """Metric-weighted L2 projection of four children onto the parent, then limit.

    Both sides of the projection use LGL quadrature on the children, so the
    projection reproduces any parent polynomial exactly; a constant
    correction then matches the parent quadrature integral to the children's.
    """
    n = ops.n
    phi = _child_basis(ops).reshape(4, n * n, n * n)
    wwj = (ops.weights_2d * entry.child_jacobians).reshape(4, n * n)
    mass = np.einsum("kpa,kp,kpb->ab", phi, wwj, phi)
    rhs = np.einsum("kpa,kp,kpc->ac", phi, wwj, U_children.reshape(4, n * n, 4))
    parent = cho_solve(cho_factor(mass), rhs).reshape(n, n, 4)

    area = np.einsum("ij,ij->", ops.weights_2d, entry.parent_jacobian)
    mismatch = _integral(U_children, entry.child_jacobians, ops) - _integral(
        parent, entry.parent_jacobian, ops
    )
    parent = parent + mismatch / area
    return _limit_element(
        parent, entry.parent_jacobian, ops, gas, eps, entry.parent, "coarsen_parent"
    )


def transfer_solution(
    plan: TransferPlan,
    old_ids: np.ndarray,
    U_old: np.ndarray,
    mesh: MeshTopology,
    ops: ReferenceOperators,
    gas: GasModel = DEFAULT_GAS,
    eps: float = DEFAULT_EPS,
) -> np.ndarray:
    """Replay ``plan`` on the old field and return it in the new active order.

    Raises:
        PositivityFailureError: If a limited average is inadmissible.
    """
    values: Dict[int, np.ndarray] = {int(e): U_old[i] for i, e in enumerate(old_ids)}
    for entry in plan.entries:
        if isinstance(entry, RefineEntry):
            children = refine_transfer(values.pop(entry.parent), entry, ops, gas, eps)
            for cid, u in zip(entry.children, children):
                values[cid] = u
        else:
            stacked = np.stack([values.pop(c) for c in entry.children])
            values[entry.parent] = coarsen_transfer(stacked, entry, ops, gas, eps)
    return np.stack([values[e] for e in mesh.active])
