"""Diagnostics, snapshot and table writers.

Field snapshots split every element into its ``N x N`` LGL subcells and are
written as legacy ASCII VTK and, optionally, XML ``.vtu`` files.
"""

import csv
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np
from lxml import etree

from ..exceptions import OutputError
from ..mesh.topology import MeshTopology
from ..numerics.euler import DEFAULT_GAS, GasModel, to_primitive
from ..numerics.limiters import physical_derivatives
from ..numerics.reference_ops import ReferenceOperators, lagrange_basis
from ..utils.logger import get_logger

logger = get_logger(__name__)

VTK_QUAD = 9


@dataclass
class DiagnosticsRow:
    """One line of the per-step diagnostics file."""

    t: float
    dt: float
    mass: float
    mom_x: float
    mom_y: float
    energy: float
    entropy: float
    min_rho: float
    min_p: float
    n_elements: int
    pp_margin: float


@dataclass
class ConvergenceRow:
    """Errors of one refinement level in a convergence study."""

    level: int
    degree: int
    flux: str
    n_elements: int
    errors: np.ndarray  # L2 error per conserved component
    rates: Optional[List[Optional[float]]] = None


DIAGNOSTICS_HEADER = [f.name for f in fields(DiagnosticsRow)]
CONVERGENCE_COMPONENTS = ("rho", "mx", "my", "E")


def _subcell_connectivity(n_elements: int, n: int) -> np.ndarray:
    """Quad corner indices ``(E * (n-1)^2, 4)`` into the flattened node array."""
    i, j = np.meshgrid(np.arange(n - 1), np.arange(n - 1), indexing="ij")
    i, j = i.ravel(), j.ravel()
    local = np.stack(
        [i * n + j, (i + 1) * n + j, (i + 1) * n + j + 1, i * n + j + 1], axis=1
    )
    offsets = (np.arange(n_elements) * n * n)[:, None, None]
    return (local[None] + offsets).reshape(-1, 4)


def point_fields(
    mesh: MeshTopology,
    U: np.ndarray,
    ops: ReferenceOperators,
    gas: GasModel = DEFAULT_GAS,
) -> dict:
    """Nodal rho, u, v, p and the Schlieren proxy ``log(1 + |grad rho|)``."""
    arrays = mesh.arrays()
    prim = to_primitive(U, gas)
    grad = physical_derivatives(U, arrays.metrics, arrays.J, ops, 1)
    grad_rho = np.hypot(grad[(1, 0)][..., 0], grad[(0, 1)][..., 0])
    return {
        "rho": prim[..., 0].ravel(),
        "u": prim[..., 1].ravel(),
        "v": prim[..., 2].ravel(),
        "p": prim[..., 3].ravel(),
        "schlieren": np.log1p(grad_rho).ravel(),
    }


class OutputWriter:
    """Write run artifacts below one output directory."""

    def __init__(self, output_dir: Path):
        """Initialize writer.

        Args:
            output_dir: Directory receiving all files (created on demand)
        """
        self.output_dir = Path(output_dir)

    def _path(self, name: str) -> Path:
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise OutputError(str(self.output_dir), str(e)) from e
        return self.output_dir / name

    def write_diagnostics(
        self, rows: Iterable[DiagnosticsRow], filename: str = "diagnostics.csv"
    ) -> Path:
        path = self._path(filename)
        try:
            with open(path, "w", newline="") as f:
                writer = csv.writer(f)
                writer.writerow(DIAGNOSTICS_HEADER)
                for row in rows:
                    values = astuple(row)
                    writer.writerow(
                        [repr(float(v)) if isinstance(v, float) else v for v in values]
                    )
        except OSError as e:
            raise OutputError(str(path), str(e)) from e
        return path

    def write_snapshot(
        self,
        mesh: MeshTopology,
        U: np.ndarray,
        ops: ReferenceOperators,
        name: str,
        gas: GasModel = DEFAULT_GAS,
        t: float = 0.0,
        vtu: bool = False,
    ) -> List[Path]:
        """Write ``<name>.vtk`` (and ``<name>.vtu`` when requested)."""
        arrays = mesh.arrays()
        points = arrays.geometry.reshape(-1, 2)
        cells = _subcell_connectivity(arrays.n_elements, ops.n)
        levels = np.repeat(arrays.levels, (ops.n - 1) ** 2)
        data = point_fields(mesh, U, ops, gas)
        paths = [self._write_vtk(name + ".vtk", points, cells, data, levels, t)]
        if vtu:
            paths.append(self._write_vtu(name + ".vtu", points, cells, data, levels))
        logger.info("Wrote snapshot %s (t=%.6g)", paths[0], t)
        return paths

    def write_mesh_vtk(self, mesh: MeshTopology, name: str = "mesh") -> Path:
        """Active element outlines with a ``level`` cell field."""
        arrays = mesh.arrays()
        corners = arrays.geometry[:, [0, -1, -1, 0], [0, 0, -1, -1]]  # (E, 4, 2)
        points = corners.reshape(-1, 2)
        cells = np.arange(points.shape[0]).reshape(-1, 4)
        return self._write_vtk(name + ".vtk", points, cells, {}, arrays.levels, None)

    def _write_vtk(
        self,
        name: str,
        points: np.ndarray,
        cells: np.ndarray,
        data: dict,
        levels: np.ndarray,
        t: Optional[float],
    ) -> Path:
        path = self._path(name)
        n_points, n_cells = points.shape[0], cells.shape[0]
        title = "dgsem-amr" if t is None else f"dgsem-amr t={t:.10g}"
        try:
            with open(path, "w") as f:
                f.write(f"# vtk DataFile Version 3.0\n{title}\nASCII\n")
                f.write("DATASET UNSTRUCTURED_GRID\n")
                f.write(f"POINTS {n_points} double\n")
                xyz = np.column_stack([points, np.zeros(n_points)])
                np.savetxt(f, xyz, fmt="%.12e")
                f.write(f"CELLS {n_cells} {5 * n_cells}\n")
                np.savetxt(f, np.column_stack([np.full(n_cells, 4), cells]), fmt="%d")
                f.write(f"CELL_TYPES {n_cells}\n")
                np.savetxt(f, np.full(n_cells, VTK_QUAD), fmt="%d")
                if data:
                    f.write(f"POINT_DATA {n_points}\n")
                    for key, values in data.items():
                        f.write(f"SCALARS {key} double 1\nLOOKUP_TABLE default\n")
                        np.savetxt(f, values, fmt="%.12e")
                f.write(f"CELL_DATA {n_cells}\n")
                f.write("SCALARS level int 1\nLOOKUP_TABLE default\n")
                np.savetxt(f, levels, fmt="%d")
        except OSError as e:
            raise OutputError(str(path), str(e)) from e
        return path

    def _write_vtu(
        self,
        name: str,
        points: np.ndarray,
        cells: np.ndarray,
        data: dict,
        levels: np.ndarray,
    ) -> Path:
        path = self._path(name)

        def data_array(
            parent: etree._Element, values: np.ndarray, **attrs: str
        ) -> None:
            node = etree.SubElement(parent, "DataArray", format="ascii", **attrs)
            node.text = " ".join(str(v) for v in np.ravel(values))

        root = etree.Element(
            "VTKFile", type="UnstructuredGrid", version="0.1", byte_order="LittleEndian"
        )
        grid = etree.SubElement(root, "UnstructuredGrid")
        piece = etree.SubElement(
            grid,
            "Piece",
            NumberOfPoints=str(points.shape[0]),
            NumberOfCells=str(cells.shape[0]),
        )
        point_data = etree.SubElement(piece, "PointData")
        for key, values in data.items():
            data_array(point_data, values, type="Float64", Name=key)
        cell_data = etree.SubElement(piece, "CellData")
        data_array(cell_data, levels, type="Int32", Name="level")
        pts = etree.SubElement(piece, "Points")
        data_array(
            pts,
            np.column_stack([points, np.zeros(points.shape[0])]),
            type="Float64",
            NumberOfComponents="3",
        )
        cell_node = etree.SubElement(piece, "Cells")
        data_array(cell_node, cells, type="Int64", Name="connectivity")
        n_cells = cells.shape[0]
        offsets = 4 * np.arange(1, n_cells + 1)
        data_array(cell_node, offsets, type="Int64", Name="offsets")
        types = np.full(n_cells, VTK_QUAD)
        data_array(cell_node, types, type="UInt8", Name="types")
        try:
            etree.ElementTree(root).write(
                str(path), pretty_print=True, xml_declaration=True, encoding="utf-8"
            )
        except OSError as e:
            raise OutputError(str(path), str(e)) from e
        return path

    def write_convergence_table(
        self, rows: Sequence[ConvergenceRow], filename: str = "convergence.csv"
    ) -> Path:
        """Columns ``level, error_<c>, rate_<c>`` per component, then run metadata."""
        path = self._path(filename)
        header = ["level"]
        for comp in CONVERGENCE_COMPONENTS:
            header += [f"error_{comp}", f"rate_{comp}"]
        header += ["degree", "flux", "n_elements"]
        try:
            with open(path, "w", newline="") as f:
                writer = csv.writer(f)
                writer.writerow(header)
                for row in rows:
                    line: List[object] = [row.level]
                    for k in range(len(CONVERGENCE_COMPONENTS)):
                        rate = row.rates[k] if row.rates is not None else None
                        error = repr(float(row.errors[k]))
                        line += [error, "" if rate is None else repr(float(rate))]
                    line += [row.degree, row.flux, row.n_elements]
                    writer.writerow(line)
        except OSError as e:
            raise OutputError(str(path), str(e)) from e
        logger.info("Wrote convergence table %s", path)
        return path

    def write_density_slice(
        self,
        mesh: MeshTopology,
        U: np.ndarray,
        ops: ReferenceOperators,
        y: float,
        filename: str = "density_slice.csv",
    ) -> Path:
        """Density along the line ``y = const`` at the xi-nodes of crossed elements."""
        x_vals, rho_vals = density_slice(mesh, U, ops, y)
        path = self._path(filename)
        try:
            with open(path, "w", newline="") as f:
                writer = csv.writer(f)
                writer.writerow(["x", "rho"])
                for x, rho in zip(x_vals, rho_vals):
                    writer.writerow([repr(float(x)), repr(float(rho))])
        except OSError as e:
            raise OutputError(str(path), str(e)) from e
        return path


def density_slice(
    mesh: MeshTopology, U: np.ndarray, ops: ReferenceOperators, y: float
) -> tuple:
    """Evaluate density on ``y = const`` in elements whose eta-range contains ``y``.

    Assumes elements with straight eta-lines (axis-aligned meshes). Returns
    ``(x, rho)`` sorted by ``x``.
    """
    arrays = mesh.arrays()
    geom = arrays.geometry
    y_lo = geom[:, 0, 0, 1]
    y_hi = geom[:, 0, -1, 1]
    hit = np.flatnonzero((y_lo <= y) & (y <= y_hi))
    xs, rhos = [], []
    for e in hit:
        eta = 2.0 * (y - y_lo[e]) / (y_hi[e] - y_lo[e]) - 1.0
        basis = lagrange_basis(ops.rule, np.asarray(eta))
        xs.append(np.einsum("j,ij->i", basis, geom[e, :, :, 0]))
        rhos.append(np.einsum("j,ij->i", basis, U[e, :, :, 0]))
    if not xs:
        return np.zeros(0), np.zeros(0)
    x = np.concatenate(xs)
    rho = np.concatenate(rhos)
    order = np.argsort(x, kind="stable")
    return x[order], rho[order]
