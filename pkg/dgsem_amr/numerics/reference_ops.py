"""One-dimensional LGL quadrature, differentiation and nonconforming operators.

Everything here is geometry independent: one ``ReferenceOperators`` bundle per
polynomial degree is built on first use and cached with read-only arrays.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..exceptions import UnsupportedDegreeError

MIN_DEGREE = 1
MAX_DEGREE = 8
NEWTON_TOL = 1e-15
NEWTON_MAX_ITER = 100


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class QuadratureRule1D:
    """LGL nodes and weights of degree ``degree`` (``degree + 1`` points)."""

    degree: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.degree + 1


@dataclass(frozen=True)
class NonconformingOperators:
    """Coarse-to-fine interpolation and fine-to-coarse projection for a 2:1 edge.

    ``interp[k][i, j]`` evaluates coarse basis ``j`` at fine node ``i`` of
    sub-edge ``k`` (0 = lower half, 1 = upper half); ``proj[k]`` is its
    mass-compatible adjoint ``M_C^-1 interp[k]^T M_F``.
    """

    interp: np.ndarray  # (2, n, n)
    proj: np.ndarray  # (2, n, n)
    mass_coarse: np.ndarray  # (n,)
    mass_fine: np.ndarray  # (n,)


@dataclass(frozen=True)
class ReferenceOperators:
    """All reference-element operators for one polynomial degree."""

    rule: QuadratureRule1D
    D: np.ndarray
    nonconforming: NonconformingOperators

    @property
    def degree(self) -> int:
        return self.rule.degree

    @property
    def n(self) -> int:
        return self.rule.n_nodes

    @property
    def nodes(self) -> np.ndarray:
        return self.rule.nodes

    @property
    def weights(self) -> np.ndarray:
        return self.rule.weights

    @property
    def weights_2d(self) -> np.ndarray:
        """Tensor-product weights ``w_i w_j`` with shape ``(n, n)``."""
        return np.outer(self.rule.weights, self.rule.weights)

    @property
    def interp(self) -> np.ndarray:
        return self.nonconforming.interp

    @property
    def proj(self) -> np.ndarray:
        return self.nonconforming.proj


def lgl_rule(N: int) -> QuadratureRule1D:
    """Compute the Legendre-Gauss-Lobatto rule with ``N + 1`` nodes.

    Newton iteration on the zeros of ``(1 - x^2) P_N'(x)`` started from the
    Chebyshev-Gauss-Lobatto points, followed by symmetrization.

    Raises:
        UnsupportedDegreeError: If ``N`` is outside ``1..8``.
    """
    if not isinstance(N, (int, np.integer)) or not MIN_DEGREE <= N <= MAX_DEGREE:
        raise UnsupportedDegreeError(
            f"Polynomial degree must be between {MIN_DEGREE} and {MAX_DEGREE}, got {N}"
        )
    N = int(N)
    x = -np.cos(np.pi * np.arange(N + 1) / N)
    P = np.zeros((N + 1, N + 1))
    for _ in range(NEWTON_MAX_ITER):
        P[:, 0] = 1.0
        P[:, 1] = x
        for k in range(2, N + 1):
            P[:, k] = ((2 * k - 1) * x * P[:, k - 1] - (k - 1) * P[:, k - 2]) / k
        x_old = x
        x = x_old - (x * P[:, N] - P[:, N - 1]) / ((N + 1) * P[:, N])
        if np.max(np.abs(x - x_old)) < NEWTON_TOL:
            break

    P[:, 0] = 1.0
    P[:, 1] = x
    for k in range(2, N + 1):
        P[:, k] = ((2 * k - 1) * x * P[:, k - 1] - (k - 1) * P[:, k - 2]) / k
    w = 2.0 / (N * (N + 1) * P[:, N] ** 2)

    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    x[0], x[-1] = -1.0, 1.0
    if N % 2 == 0:
        x[N // 2] = 0.0
    return QuadratureRule1D(degree=N, nodes=_frozen(x), weights=_frozen(w))


def _barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def diff_matrix(rule: QuadratureRule1D) -> np.ndarray:
    """Return ``D[i, j] = phi_j'(xi_i)`` for the Lagrange basis on ``rule``."""
    x = rule.nodes
    b = _barycentric_weights(x)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    D = (b[None, :] / b[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    # Negative-sum trick keeps row sums at round-off level
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def lagrange_basis(rule: QuadratureRule1D, x: np.ndarray) -> np.ndarray:
    """Evaluate all Lagrange basis functions at points ``x``.

    Returns an array of shape ``x.shape + (N + 1,)`` with entry ``phi_j(x)``.
    """
    nodes = rule.nodes
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1)
    out = np.ones((flat.size, nodes.size))
    for j, xj in enumerate(nodes):
        for m, xm in enumerate(nodes):
            if m != j:
                out[:, j] *= (flat - xm) / (xj - xm)
    return out.reshape(x.shape + (nodes.size,))


def lagrange_eval(rule: QuadratureRule1D, j: int, x: float) -> float:
    """Return ``phi_j(x)``.

    Raises:
        IndexError: If ``j`` is not a basis index of ``rule``.
        ValueError: If ``x`` lies outside ``[-1, 1]``.
    """
    if not 0 <= j <= rule.degree:
        raise IndexError(f"Basis index {j} out of range 0..{rule.degree}")
    if not -1.0 - 1e-14 <= x <= 1.0 + 1e-14:
        raise ValueError(f"Evaluation point {x} outside [-1, 1]")
    return float(lagrange_basis(rule, np.array(x))[..., j])


def nonconforming_operators(rule: QuadratureRule1D) -> NonconformingOperators:
    """Build the 2:1 interpolation and projection matrices for ``rule``."""
    w = rule.weights
    interp = np.stack(
        [
            lagrange_basis(rule, 0.5 * (rule.nodes - 1.0)),
            lagrange_basis(rule, 0.5 * (rule.nodes + 1.0)),
        ]
    )
    mass_fine = 0.5 * w
    proj = np.einsum("j,kij,i->kji", 1.0 / w, interp, mass_fine)
    return NonconformingOperators(
        interp=_frozen(interp),
        proj=_frozen(proj),
        mass_coarse=_frozen(w),
        mass_fine=_frozen(mass_fine),
    )


@lru_cache(maxsize=None)
def get_operators(N: int) -> ReferenceOperators:
    """Return the cached operator bundle for degree ``N``."""
    rule = lgl_rule(N)
    return ReferenceOperators(
        rule=rule,
        D=_frozen(diff_matrix(rule)),
        nonconforming=nonconforming_operators(rule),
    )
