"""Isoparametric element geometry: metric terms, Jacobians and face normals.

Geometry arrays have shape ``(..., n, n, 2)`` holding the physical ``(x, y)``
coordinates at the LGL nodes; index ``-3`` runs along xi and ``-2`` along eta.
"""

from typing import Callable, Tuple

import numpy as np

from ..exceptions import MeshError
from ..numerics.reference_ops import ReferenceOperators

# Warp functions map arrays of x and y to warped (x, y)
WarpFunction = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]

# Metric component order in the trailing axis of a metrics array
X_XI, X_ETA, Y_XI, Y_ETA = 0, 1, 2, 3


def reference_grid(ops: ReferenceOperators) -> Tuple[np.ndarray, np.ndarray]:
    """Return ``(xi, eta)`` tensor-product LGL node coordinates, each ``(n, n)``."""
    return np.meshgrid(ops.nodes, ops.nodes, indexing="ij")


def rectangle_geometry(
    x0: float, x1: float, y0: float, y1: float, ops: ReferenceOperators
) -> np.ndarray:
    """Nodal geometry of the affine map onto ``[x0, x1] x [y0, y1]``."""
    xi, eta = reference_grid(ops)
    x = x0 + 0.5 * (xi + 1.0) * (x1 - x0)
    y = y0 + 0.5 * (eta + 1.0) * (y1 - y0)
    return np.stack([x, y], axis=-1)


def compute_metrics(
    geometry: np.ndarray, ops: ReferenceOperators
) -> Tuple[np.ndarray, np.ndarray]:
    """Differentiate nodal geometry with ``D`` and form the Jacobian.

    Returns:
        ``(metrics, J)`` where ``metrics[..., :]`` is ``(x_xi, x_eta, y_xi,
        y_eta)`` per node and ``J = x_xi y_eta - x_eta y_xi``.

    Raises:
        MeshError: If ``J <= 0`` at any node.
    """
    D = ops.D
    d_xi = np.einsum("im,...mjc->...ijc", D, geometry)
    d_eta = np.einsum("jm,...imc->...ijc", D, geometry)
    metrics = np.stack(
        [d_xi[..., 0], d_eta[..., 0], d_xi[..., 1], d_eta[..., 1]], axis=-1
    )
    J = (
        metrics[..., X_XI] * metrics[..., Y_ETA]
        - metrics[..., X_ETA] * metrics[..., Y_XI]
    )
    if np.any(J <= 0.0):
        raise MeshError(f"Nonpositive Jacobian (min J={J.min():.6e})")
    return metrics, J


def side_normals(metrics: np.ndarray) -> np.ndarray:
    """Metric-scaled outward normals on the four element sides.

    Sides are ordered xi=-1, xi=+1, eta=-1, eta=+1; the result has shape
    ``(..., 4, n, 2)`` with nodes ordered by increasing tangential coordinate.
    """
    x_xi = metrics[..., X_XI]
    x_eta = metrics[..., X_ETA]
    y_xi = metrics[..., Y_XI]
    y_eta = metrics[..., Y_ETA]
    left = np.stack([-y_eta[..., 0, :], x_eta[..., 0, :]], axis=-1)
    right = np.stack([y_eta[..., -1, :], -x_eta[..., -1, :]], axis=-1)
    bottom = np.stack([y_xi[..., :, 0], -x_xi[..., :, 0]], axis=-1)
    top = np.stack([-y_xi[..., :, -1], x_xi[..., :, -1]], axis=-1)
    return np.stack([left, right, bottom, top], axis=-3)


def side_traces(field: np.ndarray) -> np.ndarray:
    """Nodal traces on the four sides: ``(..., n, n, C) -> (..., 4, n, C)``."""
    return np.stack(
        [
            field[..., 0, :, :],
            field[..., -1, :, :],
            field[..., :, 0, :],
            field[..., :, -1, :],
        ],
        axis=-3,
    )


def restrict_to_child(
    parent: np.ndarray, cx: int, cy: int, ops: ReferenceOperators
) -> np.ndarray:
    """Evaluate a nodal tensor-product polynomial at a child's LGL nodes.

    ``cx``/``cy`` select the lower (0) or upper (1) half in each direction.
    Works for geometry and for conserved states alike.
    """
    P = ops.interp
    return np.einsum("ia,jb,...abk->...ijk", P[cx], P[cy], parent)


def metric_identity_residual(metrics: np.ndarray, ops: ReferenceOperators) -> float:
    """Max residual of the discrete metric identities on the given elements."""
    D = ops.D
    r1 = np.einsum("im,...mj->...ij", D, metrics[..., Y_ETA]) - np.einsum(
        "jm,...im->...ij", D, metrics[..., Y_XI]
    )
    r2 = np.einsum("im,...mj->...ij", D, metrics[..., X_ETA]) - np.einsum(
        "jm,...im->...ij", D, metrics[..., X_XI]
    )
    return float(max(np.abs(r1).max(), np.abs(r2).max()))


def vortex_warp(length: float = 20.0, amplitude: float = 0.05) -> WarpFunction:
    """Periodic sinusoidal warp of both coordinates.

    ``x + L a cos(2 pi y / L)`` and ``y + L a cos(2 pi x / L)``.
    """

    def warp(x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        k = 2.0 * np.pi / length
        return (
            x + length * amplitude * np.cos(k * y),
            y + length * amplitude * np.cos(k * x),
        )

    return warp
