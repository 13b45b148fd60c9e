"""Node embeddings: ingestion, a built-in signed spectral embedder, PCA alignment
and RMS normalization into the measurement space."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .graph import GraphError, SignedGraph, _parse_node


class EmbeddingError(ValueError):
    pass


@dataclass(frozen=True)
class EmbeddingMatrix:
    node_order: tuple
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != len(self.node_order):
            raise EmbeddingError(f"matrix shape {vals.shape} does not match {len(self.node_order)} nodes")
        if not np.all(np.isfinite(vals)):
            raise EmbeddingError("embedding has non-finite entries")
        if len(set(self.node_order)) != len(self.node_order):
            raise EmbeddingError("duplicate node ids")
        object.__setattr__(self, "node_order", tuple(self.node_order))
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def rows(self, nodes) -> np.ndarray:
        idx = {u: i for i, u in enumerate(self.node_order)}
        try:
            return self.values[[idx[u] for u in nodes]]
        except KeyError as exc:
            raise EmbeddingError(f"node {exc.args[0]!r} has no embedding") from None

    def restrict(self, nodes) -> "EmbeddingMatrix":
        nodes = tuple(nodes)
        return type(self)(nodes, self.rows(nodes))

    def scaled(self, c: float) -> "EmbeddingMatrix":
        return EmbeddingMatrix(self.node_order, c * self.values)


@dataclass(frozen=True)
class AlignedEmbedding:
    """PCA-aligned, RMS-normalized embedding (global RMS of ``values`` is 1)."""

    node_order: tuple
    values: np.ndarray
    rms: float
    components: Optional[np.ndarray] = None

    @property
    def k(self) -> int:
        return self.values.shape[1]

    def rows(self, nodes) -> np.ndarray:
        idx = {u: i for i, u in enumerate(self.node_order)}
        return self.values[[idx[u] for u in nodes]]


def ingest_embeddings(source) -> EmbeddingMatrix:
    """Parse ``n d`` header followed by ``n`` rows of ``node-id v1 ... vd``."""
    if isinstance(source, bytes):
        source = io.StringIO(source.decode("utf-8"))
    elif isinstance(source, str):
        source = io.StringIO(source)
    lines = [ln.split() for ln in source if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise EmbeddingError("empty embedding file")
    try:
        n, d = (int(x) for x in lines[0])
    except ValueError:
        raise EmbeddingError(f"bad header {' '.join(lines[0])!r}; expected 'n d'") from None
    rows = lines[1:]
    if len(rows) != n:
        raise EmbeddingError(f"header declares {n} rows, found {len(rows)}")
    ids, vals = [], []
    for lineno, parts in enumerate(rows, start=2):
        if len(parts) != d + 1:
            raise EmbeddingError(f"row {lineno}: expected {d} values, got {len(parts) - 1}")
        ids.append(_parse_node(parts[0]))
        try:
            row = [float(x) for x in parts[1:]]
        except ValueError:
            raise EmbeddingError(f"row {lineno}: non-numeric value") from None
        if not all(math.isfinite(x) for x in row):
            raise EmbeddingError(f"row {lineno}: non-finite value")
        vals.append(row)
    if len(set(ids)) != len(ids):
        raise EmbeddingError("duplicate node ids")
    return EmbeddingMatrix(tuple(ids), np.array(vals, dtype=float).reshape(n, d))


def write_embeddings(emb, fh, rms: Optional[float] = None) -> None:
    n, d = emb.values.shape
    if rms is not None:
        fh.write(f"# rms={rms!r}\n")
    fh.write(f"{n} {d}\n")
    for u, row in zip(emb.node_order, emb.values):
        fh.write(str(u) + " " + " ".join(repr(float(x)) for x in row) + "\n")


def _column_signs(M: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    """+-1 per column making its largest-magnitude entry positive.

    Entries within ``rtol`` of the column maximum count as tied; the first
    such row decides, so roundoff cannot flip the choice.
    """
    A = np.abs(M)
    tied = A >= A.max(axis=0) * (1 - rtol)
    idx = np.argmax(tied, axis=0)
    signs = np.sign(M[idx, np.arange(M.shape[1])])
    signs[signs == 0] = 1.0
    return signs


def _fix_signs(M: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    return M * _column_signs(M)


def balance_laplacian(g: SignedGraph, node_order=None) -> sp.csr_matrix:
    """``D_abs - (A+ - A-)``: the signed Laplacian used by the built-in embedder."""
    order = tuple(node_order) if node_order is not None else tuple(g.node_list())
    index = {u: i for i, u in enumerate(order)}
    rows, cols, vals = [], [], []
    for edges, w in ((g.pos_edges, 1.0), (g.neg_edges, -1.0)):
        for u, v in edges:
            i, j = index[u], index[v]
            rows += [i, j]
            cols += [j, i]
            vals += [w, w]
    n = len(order)
    S = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    deg = np.asarray(abs(S).sum(axis=1)).ravel()
    return (sp.diags(deg) - S).tocsr()


def spectral_signed_embedding(g: SignedGraph, d: int, seed: int = 0, dense_limit: int = 1500,
                              eig_floor: float = 1e-2) -> EmbeddingMatrix:
    """Embed nodes with the low end of the spectrum of ``D_abs - (A+ - A-)``.

    Returns the ``d`` eigenvectors of smallest eigenvalue, excluding the
    constant vector (the trivial null vector of an all-positive component),
    each scaled by ``1/sqrt(lambda)``. Eigenvalues are floored at
    ``eig_floor`` times the mean absolute degree so that the null vector of a
    perfectly balanced graph (the two-faction indicator) gets a finite weight.
    """
    n = g.n
    if not (1 <= d < n):
        raise EmbeddingError(f"embedding dimension must satisfy 1 <= d < n={n}, got {d}")
    if not g.is_connected():
        raise GraphError("built-in embedder requires a connected graph")
    order = tuple(g.node_list())
    Lb = balance_laplacian(g, order)
    want = min(d + 1, n)
    if n <= dense_limit or want >= n - 1:
        w, V = np.linalg.eigh(Lb.toarray())
        w, V = w[:want], V[:, :want]
    else:
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(n)
        shift = -1e-3 * max(float(Lb.diagonal().mean()), 1.0)
        w, V = eigsh(Lb.tocsc(), k=want, sigma=shift, which="LM", v0=v0, tol=1e-10)
        order_idx = np.argsort(w)
        w, V = w[order_idx], V[:, order_idx]

    ones = np.ones(n) / math.sqrt(n)
    scale_ref = max(abs(w).max(initial=0.0), 1e-300)
    keep = []
    for j in range(V.shape[1]):
        trivial = abs(w[j]) <= 1e-8 * scale_ref and abs(V[:, j] @ ones) > 1 - 1e-6
        if not trivial:
            keep.append(j)
    keep = keep[:d]
    floor = eig_floor * float(Lb.diagonal().mean())
    lam = np.maximum(w[keep], floor)
    X = V[:, keep] / np.sqrt(lam)
    return EmbeddingMatrix(order, _fix_signs(X))


def pca_align(H: EmbeddingMatrix, k: int, center: bool = True):
    """Project ``H`` on its top-``k`` principal directions.

    Returns ``(Z, W)`` with ``Z`` of shape ``n x k`` and orthonormal ``W``.
    Columns of ``Z`` come out in nonincreasing variance order with the
    largest-magnitude entry positive.
    """
    X = H.values
    n, d = X.shape
    if n < 2:
        raise EmbeddingError("PCA needs at least two rows")
    if not (1 <= k <= d):
        raise EmbeddingError(f"k must satisfy 1 <= k <= d={d}, got {k}")
    Xc = X - X.mean(axis=0) if center else X
    if not np.any(Xc):
        raise EmbeddingError("embedding has zero variance")
    cov = Xc.T @ Xc / (n - 1)
    cov = (cov + cov.T) / 2
    w, V = np.linalg.eigh(cov)
    W = V[:, ::-1][:, :k]
    Z = Xc @ W
    signs = _column_signs(Z)
    return Z * signs, W * signs


def rms_normalize(Z: np.ndarray, node_order, components=None) -> AlignedEmbedding:
    Z = np.asarray(Z, dtype=float)
    rms = float(np.sqrt(np.mean(Z ** 2)))
    if rms == 0.0:
        raise EmbeddingError("cannot normalize an all-zero matrix")
    return AlignedEmbedding(tuple(node_order), Z / rms, rms, components)


def align(H: EmbeddingMatrix, k: int, center: bool = True) -> AlignedEmbedding:
    """PCA to ``k`` dimensions followed by global RMS normalization."""
    Z, W = pca_align(H, k, center)
    return rms_normalize(Z, H.node_order, W)
