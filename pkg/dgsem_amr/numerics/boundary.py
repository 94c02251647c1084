"""Boundary conditions expressed as exterior (ghost) states.

Every condition produces the state placed in the exterior slot of the LLF
flux at boundary nodes, so boundary faces share the conforming flux code.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from ..exceptions import MeshError
from .euler import GasModel

# (x, y, t) -> conserved states with trailing axis 4
StateFunction = Callable[[np.ndarray, np.ndarray, float], np.ndarray]
# (x, y) -> boolean mask
RegionPredicate = Callable[[np.ndarray, np.ndarray], np.ndarray]


class BoundaryCondition(ABC):
    """Base class for boundary conditions."""

    @abstractmethod
    def ghost(
        self,
        U_in: np.ndarray,
        xy: np.ndarray,
        normal: np.ndarray,
        t: float,
        gas: GasModel,
    ) -> np.ndarray:
        """Exterior states for interior traces ``U_in`` at points ``xy``.

        Args:
            U_in: Interior trace states ``(..., 4)``
            xy: Physical node coordinates ``(..., 2)``
            normal: Outward (metric-scaled) normals ``(..., 2)``
            t: Time
            gas: Gas model

        Returns:
            Ghost states with the shape of ``U_in``
        """


@dataclass(frozen=True)
class Outflow(BoundaryCondition):
    """Zero-gradient outflow: the ghost copies the interior."""

    def ghost(
        self,
        U_in: np.ndarray,
        xy: np.ndarray,
        normal: np.ndarray,
        t: float,
        gas: GasModel,
    ) -> np.ndarray:
        return np.array(U_in, copy=True)


@dataclass(frozen=True)
class Inflow(BoundaryCondition):
    """Fixed exterior state."""

    state: np.ndarray

    def ghost(
        self,
        U_in: np.ndarray,
        xy: np.ndarray,
        normal: np.ndarray,
        t: float,
        gas: GasModel,
    ) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.state, dtype=float), U_in.shape).copy()


@dataclass(frozen=True)
class ReflectiveWall(BoundaryCondition):
    """Slip wall: mirror the normal momentum component."""

    def ghost(
        self,
        U_in: np.ndarray,
        xy: np.ndarray,
        normal: np.ndarray,
        t: float,
        gas: GasModel,
    ) -> np.ndarray:
        n_hat = normal / np.linalg.norm(normal, axis=-1, keepdims=True)
        m = U_in[..., 1:3]
        mn = np.sum(m * n_hat, axis=-1, keepdims=True)
        out = np.array(U_in, copy=True)
        out[..., 1:3] = m - 2.0 * mn * n_hat
        return out


@dataclass(frozen=True)
class Dirichlet(BoundaryCondition):
    """Time-dependent exterior state ``fn(x, y, t)``."""

    fn: StateFunction

    def ghost(
        self,
        U_in: np.ndarray,
        xy: np.ndarray,
        normal: np.ndarray,
        t: float,
        gas: GasModel,
    ) -> np.ndarray:
        state = np.asarray(self.fn(xy[..., 0], xy[..., 1], t), dtype=float)
        return np.broadcast_to(state, U_in.shape).copy()


@dataclass(frozen=True)
class Split(BoundaryCondition):
    """Use ``inside`` where ``predicate(x, y)`` holds and ``outside`` elsewhere."""

    predicate: RegionPredicate
    inside: BoundaryCondition
    outside: BoundaryCondition

    def ghost(
        self,
        U_in: np.ndarray,
        xy: np.ndarray,
        normal: np.ndarray,
        t: float,
        gas: GasModel,
    ) -> np.ndarray:
        mask = np.asarray(self.predicate(xy[..., 0], xy[..., 1]), dtype=bool)
        a = self.inside.ghost(U_in, xy, normal, t, gas)
        b = self.outside.ghost(U_in, xy, normal, t, gas)
        return np.where(mask[..., None], a, b)


@dataclass(frozen=True)
class Periodic(BoundaryCondition):
    """Marker for periodic sides; periodic meshes never emit boundary faces."""

    def ghost(
        self,
        U_in: np.ndarray,
        xy: np.ndarray,
        normal: np.ndarray,
        t: float,
        gas: GasModel,
    ) -> np.ndarray:
        raise MeshError("Periodic binding used on a non-periodic boundary side")


BoundaryConditions = Mapping[str, BoundaryCondition]


def resolve_boundary(bcs: BoundaryConditions, tag: str) -> BoundaryCondition:
    """Look up the binding for ``tag``.

    Raises:
        MeshError: If the tag is unbound.
    """
    try:
        return bcs[tag]
    except KeyError:
        raise MeshError(f"No boundary condition bound to tag '{tag}'") from None
