"""Curvilinear quadtree meshes and adaptation."""

from .geometry import (
    compute_metrics,
    rectangle_geometry,
    restrict_to_child,
    side_normals,
    side_traces,
    vortex_warp,
)
from .topology import (
    Element,
    Face,
    FaceKind,
    GeometryReport,
    MeshArrays,
    MeshTopology,
    SideKind,
    apply_warp,
    build_cartesian,
    checkerboard_refine,
    uniform_refine,
    validate_geometry,
)

__all__ = [
    "Element",
    "Face",
    "FaceKind",
    "GeometryReport",
    "MeshArrays",
    "MeshTopology",
    "SideKind",
    "apply_warp",
    "build_cartesian",
    "checkerboard_refine",
    "compute_metrics",
    "rectangle_geometry",
    "restrict_to_child",
    "side_normals",
    "side_traces",
    "uniform_refine",
    "validate_geometry",
    "vortex_warp",
]
