"""Quadtree forest of curvilinear quadrilaterals with 2:1 connectivity.

Elements live on a Cartesian base grid; an element at refinement level ``l``
is identified by its integer cell coordinates ``(l, I, J)`` on the level-``l``
grid of ``(nx * 2**l) x (ny * 2**l)`` cells. All elements share the reference
orientation (xi along +I, eta along +J), so traces on either side of a face
are ordered by the same increasing tangential coordinate.
"""

from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import MeshError
from ..numerics.reference_ops import ReferenceOperators
from ..utils.logger import get_logger
from .geometry import (
    WarpFunction,
    compute_metrics,
    rectangle_geometry,
    restrict_to_child,
    side_normals,
)

logger = get_logger(__name__)

SIDE_TAGS = ("left", "right", "bottom", "top")
OPPOSITE_SIDE = (1, 0, 3, 2)
# Child order is (cx, cy) = (0, 0), (1, 0), (0, 1), (1, 1)
CHILD_OFFSETS = ((0, 0), (1, 0), (0, 1), (1, 1))

CellKey = Tuple[int, int, int]


class FaceKind(str, Enum):
    """Kind of a mesh face."""

    CONFORMING = "conforming"
    NONCONFORMING = "nonconforming"
    BOUNDARY = "boundary"


class SideKind(IntEnum):
    """Role of one element side."""

    CONFORMING = 0
    FINE = 1
    COARSE = 2
    BOUNDARY = 3


@dataclass(eq=False)
class Element:
    """One quadtree cell with isoparametric geometry."""

    id: int
    level: int
    I: int
    J: int
    geometry: np.ndarray
    metrics: np.ndarray
    jacobian: np.ndarray
    parent: Optional[int] = None
    children: Optional[Tuple[int, int, int, int]] = None
    active: bool = True

    @property
    def key(self) -> CellKey:
        return (self.level, self.I, self.J)

    @property
    def child_position(self) -> Tuple[int, int]:
        """``(cx, cy)`` of this element inside its parent."""
        return (self.I & 1, self.J & 1)


@dataclass(frozen=True)
class Face:
    """A mesh face.

    Conforming faces hold ``(left, right)``; nonconforming faces hold
    ``(coarse, fine_1, fine_2)`` with ``fine_1`` covering the lower half of
    the coarse side; boundary faces hold a single element and a tag.
    """

    kind: FaceKind
    elements: Tuple[int, ...]
    sides: Tuple[int, ...]
    tag: Optional[str] = None


@dataclass
class MeshArrays:
    """Stacked per-element data and face index arrays in active order."""

    ids: np.ndarray
    index: Dict[int, int]
    geometry: np.ndarray  # (E, n, n, 2)
    metrics: np.ndarray  # (E, n, n, 4)
    J: np.ndarray  # (E, n, n)
    normals: np.ndarray  # (E, 4, n, 2)
    levels: np.ndarray  # (E,)
    h: np.ndarray  # (E,)
    side_kind: np.ndarray  # (E, 4)
    conf_l: np.ndarray
    conf_ls: np.ndarray
    conf_r: np.ndarray
    conf_rs: np.ndarray
    nc_c: np.ndarray
    nc_cs: np.ndarray
    nc_f: np.ndarray  # (Fn, 2)
    nc_fs: np.ndarray
    bnd_e: np.ndarray
    bnd_s: np.ndarray
    bnd_tag: np.ndarray

    @property
    def n_elements(self) -> int:
        return int(self.ids.size)


@dataclass
class GeometryReport:
    """Maximum violation of each geometric consistency check."""

    watertight: float
    nonconforming_normals: float
    min_jacobian: float

    @property
    def ok(self) -> bool:
        return self.min_jacobian > 0.0


class MeshTopology:
    """Active quadtree leaves over a Cartesian base mesh."""

    def __init__(
        self,
        nx: int,
        ny: int,
        bounds: Tuple[float, float, float, float],
        periodic: Tuple[bool, bool],
        ops: ReferenceOperators,
    ):
        self.nx = nx
        self.ny = ny
        self.bounds = tuple(float(b) for b in bounds)
        self.periodic = (bool(periodic[0]), bool(periodic[1]))
        self.ops = ops
        self.elements: Dict[int, Element] = {}
        self.active: List[int] = []
        self._cells: Dict[CellKey, int] = {}
        self._next_id = 0
        self._faces: Optional[List[Face]] = None
        self._arrays: Optional[MeshArrays] = None

    # ------------------------------------------------------------------
    # Construction helpers
    # ------------------------------------------------------------------

    def _add_element(
        self, level: int, I: int, J: int, geometry: np.ndarray, parent: Optional[int]
    ) -> Element:
        metrics, jac = compute_metrics(geometry, self.ops)
        elem = Element(
            id=self._next_id,
            level=level,
            I=I,
            J=J,
            geometry=geometry,
            metrics=metrics,
            jacobian=jac,
            parent=parent,
        )
        self._next_id += 1
        self.elements[elem.id] = elem
        self._cells[elem.key] = elem.id
        return elem

    def _invalidate(self) -> None:
        self._faces = None
        self._arrays = None

    @property
    def n_active(self) -> int:
        return len(self.active)

    @property
    def max_level(self) -> int:
        return max(self.elements[e].level for e in self.active)

    def grid_size(self, level: int) -> Tuple[int, int]:
        return self.nx << level, self.ny << level

    def cell(self, key: CellKey) -> Optional[Element]:
        """Element (active or not) occupying ``key``, if it exists."""
        eid = self._cells.get(key)
        return self.elements[eid] if eid is not None else None

    def leaf(self, key: CellKey) -> Optional[int]:
        """Active element id at ``key``, if that cell is an active leaf."""
        eid = self._cells.get(key)
        if eid is not None and self.elements[eid].active:
            return eid
        return None

    # ------------------------------------------------------------------
    # Refinement
    # ------------------------------------------------------------------

    def _split(self, eid: int) -> Tuple[int, int, int, int]:
        parent = self.elements[eid]
        if not parent.active:
            raise MeshError(f"Element {eid} is not an active leaf")
        children = []
        for cx, cy in CHILD_OFFSETS:
            child = self._add_element(
                parent.level + 1,
                2 * parent.I + cx,
                2 * parent.J + cy,
                restrict_to_child(parent.geometry, cx, cy, self.ops),
                parent=eid,
            )
            children.append(child.id)
        parent.children = tuple(children)  # type: ignore[assignment]
        parent.active = False
        return parent.children  # type: ignore[return-value]

    def refine(self, ids: Iterable[int]) -> Dict[int, Tuple[int, int, int, int]]:
        """Split each listed active element into four children.

        Children replace their parent in the active ordering. Returns the
        mapping parent id -> child ids.
        """
        targets = [e for e in dict.fromkeys(ids)]
        created = {eid: self._split(eid) for eid in targets}
        if created:
            new_active: List[int] = []
            for eid in self.active:
                if eid in created:
                    new_active.extend(created[eid])
                else:
                    new_active.append(eid)
            self.active = new_active
            self._invalidate()
        return created

    def coarsen(
        self, parent_ids: Iterable[int]
    ) -> Dict[int, Tuple[int, int, int, int]]:
        """Merge the four active children of each listed parent.

        Returns the mapping parent id -> removed child ids.
        """
        removed: Dict[int, Tuple[int, int, int, int]] = {}
        for pid in dict.fromkeys(parent_ids):
            parent = self.elements[pid]
            if parent.children is None:
                raise MeshError(f"Element {pid} has no children to merge")
            for cid in parent.children:
                if not self.elements[cid].active:
                    raise MeshError(f"Child {cid} of {pid} is not an active leaf")
            removed[pid] = parent.children
        if not removed:
            return removed

        child_to_parent = {c: p for p, cs in removed.items() for c in cs}
        new_active: List[int] = []
        placed = set()
        for eid in self.active:
            pid = child_to_parent.get(eid)
            if pid is None:
                new_active.append(eid)
            elif pid not in placed:
                placed.add(pid)
                new_active.append(pid)
        self.active = new_active

        for pid, children in removed.items():
            parent = self.elements[pid]
            for cid in children:
                child = self.elements.pop(cid)
                del self._cells[child.key]
            parent.children = None
            parent.active = True
        self._invalidate()
        return removed

    # ------------------------------------------------------------------
    # Geometry updates
    # ------------------------------------------------------------------

    def set_geometry(self, eid: int, geometry: np.ndarray) -> None:
        """Replace one element's nodal geometry and recompute its metrics."""
        elem = self.elements[eid]
        elem.metrics, elem.jacobian = compute_metrics(geometry, self.ops)
        elem.geometry = geometry
        self._invalidate()

    def _restrict_descendants(self, eid: int) -> None:
        elem = self.elements[eid]
        if elem.children is None:
            return
        for cid, (cx, cy) in zip(elem.children, CHILD_OFFSETS):
            child = self.elements[cid]
            child.geometry = restrict_to_child(elem.geometry, cx, cy, self.ops)
            child.metrics, child.jacobian = compute_metrics(child.geometry, self.ops)
            self._restrict_descendants(cid)

    def roots(self) -> List[Element]:
        return [e for e in self.elements.values() if e.level == 0]

    # ------------------------------------------------------------------
    # Connectivity
    # ------------------------------------------------------------------

    def neighbor_key(self, key: CellKey, side: int) -> Optional[CellKey]:
        """Same-level cell across ``side``, wrapped periodically; None outside."""
        level, I, J = key
        Nx, Ny = self.grid_size(level)
        if side == 0:
            I -= 1
        elif side == 1:
            I += 1
        elif side == 2:
            J -= 1
        else:
            J += 1
        if not 0 <= I < Nx:
            if not self.periodic[0]:
                return None
            I %= Nx
        if not 0 <= J < Ny:
            if not self.periodic[1]:
                return None
            J %= Ny
        return (level, I, J)

    def neighbor_info(self, eid: int, side: int) -> Tuple[SideKind, Tuple[int, ...]]:
        """Classify one side of an active element and return its neighbors.

        Raises:
            MeshError: If the neighborhood violates 2:1 balance.
        """
        elem = self.elements[eid]
        nkey = self.neighbor_key(elem.key, side)
        if nkey is None:
            return SideKind.BOUNDARY, ()
        same = self.leaf(nkey)
        if same is not None:
            return SideKind.CONFORMING, (same,)
        level, I, J = nkey
        if level > 0:
            coarse = self.leaf((level - 1, I >> 1, J >> 1))
            if coarse is not None:
                return SideKind.FINE, (coarse,)
        cell = self.cell(nkey)
        if cell is not None and cell.children is not None:
            if side in (0, 1):
                cx = 1 if side == 0 else 0
                fine = (cell.children[cx], cell.children[cx + 2])
            else:
                cy = 1 if side == 2 else 0
                fine = (cell.children[2 * cy], cell.children[2 * cy + 1])
            if all(self.elements[f].active for f in fine):
                return SideKind.COARSE, fine
        raise MeshError(
            f"2:1 balance violated at element {eid} (level {elem.level}) side {side}"
        )

    @property
    def faces(self) -> List[Face]:
        if self._faces is None:
            self._faces = self._build_faces()
        return self._faces

    def _build_faces(self) -> List[Face]:
        faces: List[Face] = []
        for eid in self.active:
            for side in range(4):
                kind, nbs = self.neighbor_info(eid, side)
                if kind is SideKind.CONFORMING and side in (1, 3):
                    faces.append(
                        Face(
                            FaceKind.CONFORMING,
                            (eid, nbs[0]),
                            (side, OPPOSITE_SIDE[side]),
                        )
                    )
                elif kind is SideKind.COARSE:
                    opp = OPPOSITE_SIDE[side]
                    faces.append(
                        Face(
                            FaceKind.NONCONFORMING,
                            (eid, nbs[0], nbs[1]),
                            (side, opp, opp),
                        )
                    )
                elif kind is SideKind.BOUNDARY:
                    faces.append(
                        Face(FaceKind.BOUNDARY, (eid,), (side,), tag=SIDE_TAGS[side])
                    )
        return faces

    def arrays(self) -> MeshArrays:
        """Stacked solver arrays for the current topology (cached)."""
        if self._arrays is None:
            self._arrays = self._build_arrays()
        return self._arrays

    def _build_arrays(self) -> MeshArrays:
        ids = np.asarray(self.active, dtype=int)
        index = {int(e): i for i, e in enumerate(ids)}
        elems = [self.elements[e] for e in self.active]
        geometry = np.stack([e.geometry for e in elems])
        metrics = np.stack([e.metrics for e in elems])
        J = np.stack([e.jacobian for e in elems])
        E = len(elems)

        coverage = np.zeros((E, 4), dtype=int)
        side_kind = np.full((E, 4), -1, dtype=int)
        conf: List[Tuple[int, int, int, int]] = []
        nc_c, nc_cs, nc_f, nc_fs = [], [], [], []
        bnd_e, bnd_s, bnd_tag = [], [], []
        for face in self.faces:
            rows = [index[e] for e in face.elements]
            if face.kind is FaceKind.CONFORMING:
                conf.append((rows[0], face.sides[0], rows[1], face.sides[1]))
                side_kind[rows[0], face.sides[0]] = SideKind.CONFORMING
                side_kind[rows[1], face.sides[1]] = SideKind.CONFORMING
            elif face.kind is FaceKind.NONCONFORMING:
                nc_c.append(rows[0])
                nc_cs.append(face.sides[0])
                nc_f.append((rows[1], rows[2]))
                nc_fs.append(face.sides[1])
                side_kind[rows[0], face.sides[0]] = SideKind.COARSE
                side_kind[rows[1], face.sides[1]] = SideKind.FINE
                side_kind[rows[2], face.sides[2]] = SideKind.FINE
            else:
                bnd_e.append(rows[0])
                bnd_s.append(face.sides[0])
                bnd_tag.append(face.tag)
                side_kind[rows[0], face.sides[0]] = SideKind.BOUNDARY
            for r, s in zip(rows, face.sides):
                coverage[r, s] += 1
        if np.any(coverage != 1):
            bad = np.argwhere(coverage != 1)[0]
            raise MeshError(
                f"Element side covered {coverage[bad[0], bad[1]]} times "
                f"(element {ids[bad[0]]}, side {bad[1]})"
            )

        conf_arr = np.asarray(conf, dtype=int).reshape(-1, 4)
        return MeshArrays(
            ids=ids,
            index=index,
            geometry=geometry,
            metrics=metrics,
            J=J,
            normals=side_normals(metrics),
            levels=np.asarray([e.level for e in elems], dtype=int),
            h=np.sqrt(J.reshape(E, -1).max(axis=1)),
            side_kind=side_kind,
            conf_l=conf_arr[:, 0],
            conf_ls=conf_arr[:, 1],
            conf_r=conf_arr[:, 2],
            conf_rs=conf_arr[:, 3],
            nc_c=np.asarray(nc_c, dtype=int),
            nc_cs=np.asarray(nc_cs, dtype=int),
            nc_f=np.asarray(nc_f, dtype=int).reshape(-1, 2),
            nc_fs=np.asarray(nc_fs, dtype=int),
            bnd_e=np.asarray(bnd_e, dtype=int),
            bnd_s=np.asarray(bnd_s, dtype=int),
            bnd_tag=np.asarray(bnd_tag, dtype=object),
        )

    def check_balance(self) -> None:
        """Raise MeshError if any active side violates 2:1 balance."""
        for eid in self.active:
            for side in range(4):
                self.neighbor_info(eid, side)

    def finest_level_in(self, key: CellKey) -> Optional[int]:
        """Deepest active level inside cell ``key``.

        Returns None when the cell is covered by a coarser leaf.
        """
        elem = self.cell(key)
        if elem is None:
            return None
        if elem.active:
            return elem.level
        assert elem.children is not None
        levels = [self.finest_level_in(self.elements[c].key) for c in elem.children]
        return max(lv for lv in levels if lv is not None)

    def domain_area(self) -> float:
        """Quadrature area ``sum_e sum_ij w_i w_j J_ij`` of the active mesh."""
        arr = self.arrays()
        return float(np.einsum("ij,eij->", self.ops.weights_2d, arr.J))


def build_cartesian(
    nx: int,
    ny: int,
    bounds: Sequence[float],
    periodic: Tuple[bool, bool],
    ops: ReferenceOperators,
) -> MeshTopology:
    """Uniform ``nx x ny`` mesh of ``bounds = (x0, x1, y0, y1)``.

    Raises:
        MeshError: On nonpositive counts or degenerate bounds.
    """
    if nx < 1 or ny < 1:
        raise MeshError(f"Element counts must be positive, got {nx}x{ny}")
    x0, x1, y0, y1 = (float(b) for b in bounds)
    if not (x1 > x0 and y1 > y0):
        raise MeshError(f"Degenerate bounds {tuple(bounds)}")
    mesh = MeshTopology(nx, ny, (x0, x1, y0, y1), periodic, ops)
    hx = (x1 - x0) / nx
    hy = (y1 - y0) / ny
    for J in range(ny):
        for I in range(nx):
            geom = rectangle_geometry(
                x0 + I * hx, x0 + (I + 1) * hx, y0 + J * hy, y0 + (J + 1) * hy, ops
            )
            elem = mesh._add_element(0, I, J, geom, parent=None)
            mesh.active.append(elem.id)
    logger.debug("Built %dx%d Cartesian mesh on %s", nx, ny, (x0, x1, y0, y1))
    return mesh


def checkerboard_refine(mesh: MeshTopology) -> MeshTopology:
    """Split every other base element (``I + J`` even) into four children.

    Raises:
        MeshError: If the mesh is not uniform at level 0 or a count is odd.
    """
    if any(mesh.elements[e].level != 0 for e in mesh.active):
        raise MeshError("Checkerboard refinement requires an unrefined base mesh")
    if mesh.nx % 2 or mesh.ny % 2:
        raise MeshError(
            f"Checkerboard pattern undefined for odd counts {mesh.nx}x{mesh.ny}"
        )
    mesh.refine(
        [e for e in mesh.active if (mesh.elements[e].I + mesh.elements[e].J) % 2 == 0]
    )
    mesh.check_balance()
    return mesh


def uniform_refine(mesh: MeshTopology, levels: int = 1) -> MeshTopology:
    """Split every active element ``levels`` times."""
    for _ in range(levels):
        mesh.refine(list(mesh.active))
    return mesh


def apply_warp(mesh: MeshTopology, warp: WarpFunction) -> MeshTopology:
    """Map root-element nodes through ``warp`` and re-restrict all descendants.

    Shared physical points of neighboring roots receive identical images;
    descendants evaluate their parent's polynomial geometry, so refined faces
    tile their coarse neighbors exactly.

    Raises:
        MeshError: If the warped mesh has a nonpositive Jacobian.
    """
    for root in mesh.roots():
        x, y = warp(root.geometry[..., 0], root.geometry[..., 1])
        root.geometry = np.stack([x, y], axis=-1)
        root.metrics, root.jacobian = compute_metrics(root.geometry, mesh.ops)
        mesh._restrict_descendants(root.id)
    mesh._invalidate()
    return mesh


def validate_geometry(mesh: MeshTopology) -> GeometryReport:
    """Check watertightness, nonconforming normal reproduction and ``J > 0``."""
    arr = mesh.arrays()
    P = mesh.ops.interp
    nrm = arr.normals

    watertight = 0.0
    if arr.conf_l.size:
        n_l = nrm[arr.conf_l, arr.conf_ls]
        n_r = nrm[arr.conf_r, arr.conf_rs]
        watertight = float(np.abs(n_l + n_r).max())

    nonconforming = 0.0
    if arr.nc_c.size:
        n_c = nrm[arr.nc_c, arr.nc_cs]  # (F, n, 2)
        for k in range(2):
            n_f = nrm[arr.nc_f[:, k], arr.nc_fs]
            interp = np.einsum("ij,fjd->fid", P[k], n_c)
            nonconforming = max(nonconforming, float(np.abs(interp + 2.0 * n_f).max()))

    return GeometryReport(
        watertight=watertight,
        nonconforming_normals=nonconforming,
        min_jacobian=float(arr.J.min()),
    )
