"""Scaled signed Laplacian and effective-resistance quadratic forms.

Quadratic forms ``b^T L^+ b`` are evaluated with a Jacobi-preconditioned
conjugate gradient solve on the mean-centred right-hand side; a dense
eigendecomposition pseudoinverse is kept as an independent oracle.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import LinearOperator, cg

from .graph import GraphError, SignedGraph


class SolverError(RuntimeError):
    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class DisconnectedGraphError(GraphError):
    pass


def _check_eta(eta: float) -> float:
    eta = float(eta)
    if not (0.0 < eta <= 1.0):
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    return eta


@dataclass(frozen=True)
class SolverConfig:
    rel_tolerance: float = 1e-8
    max_iterations: int | None = None  # None means 10 * n
    preconditioner: str = "jacobi"

    def __post_init__(self):
        if self.rel_tolerance <= 0:
            raise ValueError("rel_tolerance must be positive")
        if self.preconditioner not in ("none", "jacobi"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")


@dataclass(frozen=True)
class ScaledLaplacian:
    node_order: tuple
    matrix: sp.csr_matrix
    eta: float
    index: dict = field(repr=False, compare=False)
    n_components: int = 1

    @property
    def n(self) -> int:
        return len(self.node_order)

    @property
    def degrees(self) -> np.ndarray:
        return self.matrix.diagonal()

    def vector(self, values: dict) -> np.ndarray:
        """Lay out a node->value mapping along ``node_order``."""
        return np.array([values[u] for u in self.node_order], dtype=float)

    def dump(self, fh) -> None:
        """Write the matrix in coordinate text form, one ``i j value`` per line."""
        coo = self.matrix.tocoo()
        for i, j, x in sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist())):
            fh.write(f"{i} {j} {x!r}\n")


def _index(g: SignedGraph, node_order=None):
    order = tuple(node_order) if node_order is not None else tuple(g.node_list())
    index = {u: i for i, u in enumerate(order)}
    return order, index


def scaled_adjacency(g: SignedGraph, eta: float, node_order=None) -> sp.csr_matrix:
    """Weight 1 on positive edges, ``eta`` on negative edges, symmetric."""
    eta = _check_eta(eta)
    order, index = _index(g, node_order)
    n = len(order)
    rows, cols, vals = [], [], []
    for edges, w in ((g.pos_edges, 1.0), (g.neg_edges, eta)):
        for u, v in edges:
            i, j = index[u], index[v]
            rows += [i, j]
            cols += [j, i]
            vals += [w, w]
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def signed_laplacian(g: SignedGraph, eta: float, node_order=None) -> ScaledLaplacian:
    if g.n == 0:
        raise GraphError("graph is empty")
    order, index = _index(g, node_order)
    A = scaled_adjacency(g, eta, order)
    deg = np.asarray(A.sum(axis=1)).ravel()
    L = (sp.diags(deg) - A).tocsr()
    L.sort_indices()
    ncomp = connected_components(A, directed=False)[0] if g.n > 1 else 1
    return ScaledLaplacian(order, L, float(eta), index, int(ncomp))


def _require_connected(L: ScaledLaplacian):
    if L.n_components != 1:
        raise DisconnectedGraphError(
            f"graph has {L.n_components} connected components; restrict to the largest "
            "connected component before computing effective-resistance quantities")


def _solve(L: ScaledLaplacian, rhs: np.ndarray, config: SolverConfig) -> np.ndarray:
    n = L.n
    maxiter = config.max_iterations if config.max_iterations is not None else 10 * n
    M = None
    if config.preconditioner == "jacobi":
        inv_d = 1.0 / np.where(L.degrees > 0, L.degrees, 1.0)
        M = LinearOperator((n, n), matvec=lambda x: inv_d * x, dtype=float)
    x, info = cg(L.matrix, rhs, rtol=config.rel_tolerance, atol=0.0, maxiter=maxiter, M=M)
    if info != 0:
        res = float(np.linalg.norm(rhs - L.matrix @ x) / max(np.linalg.norm(rhs), 1e-300))
        raise SolverError(f"conjugate gradient did not converge in {maxiter} iterations "
                          f"(relative residual {res:.3e})", res)
    return x


def quad_form(L: ScaledLaplacian, b, config: SolverConfig = SolverConfig()) -> float:
    """``b^T L^+ b`` for a connected graph via an iterative solve.

    ``b`` is mean-centred first so the system is consistent; the returned
    value adds the residual correction ``x^T r``, which makes its error
    quadratic in the solver error and keeps it nonnegative.
    """
    _require_connected(L)
    b = np.asarray(b, dtype=float)
    if b.shape != (L.n,):
        raise ValueError(f"vector length {b.shape} does not match {L.n} nodes")
    if not np.all(np.isfinite(b)):
        raise ValueError("vector has non-finite entries")
    bc = b - b.mean()
    scale = np.linalg.norm(bc)
    # constant vectors lie in the nullspace; centring leaves only roundoff
    if scale <= 1e-13 * np.sqrt(L.n) * np.abs(b).max(initial=0.0):
        return 0.0
    x = _solve(L, bc, config)
    r = bc - L.matrix @ x
    val = float(bc @ x + x @ r)
    return max(val, 0.0)


def quad_forms(L: ScaledLaplacian, B, config: SolverConfig = SolverConfig()) -> np.ndarray:
    """Column-wise :func:`quad_form` over an ``n x k`` matrix."""
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    return np.array([quad_form(L, B[:, j], config) for j in range(B.shape[1])])


def dense_pseudoinverse(L: ScaledLaplacian, cap: int = 2000) -> np.ndarray:
    if L.n > cap:
        raise ValueError(f"dense pseudoinverse limited to {cap} nodes, graph has {L.n}")
    dense = L.matrix.toarray()
    w, V = np.linalg.eigh(dense)
    cutoff = 1e-10 * max(abs(w).max(initial=0.0), 1e-300)
    inv = np.where(np.abs(w) > cutoff, 1.0 / np.where(w == 0, 1.0, w), 0.0)
    P = (V * inv) @ V.T
    return (P + P.T) / 2


def effective_resistance(L: ScaledLaplacian, u, v, config: SolverConfig = SolverConfig()) -> float:
    for node in (u, v):
        if node not in L.index:
            raise KeyError(f"unknown node {node!r}")
    if u == v:
        return 0.0
    b = np.zeros(L.n)
    b[L.index[u]] = 1.0
    b[L.index[v]] = -1.0
    return quad_form(L, b, config)
