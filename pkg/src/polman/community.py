"""Community detection: signed Louvain for estimating k and k-means over embeddings."""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
import scipy.sparse as sp

from .graph import SignedGraph

logger = logging.getLogger(__name__)


class CommunityError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    assignment: Mapping
    k: int

    def __post_init__(self):
        labels = set(self.assignment.values())
        if labels != set(range(self.k)):
            raise CommunityError("community indices must be dense in 0..k-1 with no empty community")

    @classmethod
    def from_labels(cls, node_order, labels) -> "Partition":
        """Relabel densely in order of first appearance along ``node_order``."""
        remap = {}
        assignment = {}
        for u, lab in zip(node_order, labels):
            if lab not in remap:
                remap[lab] = len(remap)
            assignment[u] = remap[lab]
        return cls(assignment, len(remap))

    def members(self, i: int) -> list:
        return sorted(u for u, c in self.assignment.items() if c == i)

    def communities(self) -> list:
        groups = [[] for _ in range(self.k)]
        for u in sorted(self.assignment):
            groups[self.assignment[u]].append(u)
        return groups

    def sizes(self) -> list:
        counts = Counter(self.assignment.values())
        return [counts[i] for i in range(self.k)]


def write_partition(part: Partition, fh) -> None:
    for u in sorted(part.assignment):
        fh.write(f"{u} {part.assignment[u]}\n")


def _signed_matrices(g: SignedGraph, order):
    index = {u: i for i, u in enumerate(order)}
    n = len(order)

    def mat(edges):
        if not edges:
            return sp.csr_matrix((n, n))
        r = [index[u] for u, _ in edges]
        c = [index[v] for _, v in edges]
        M = sp.csr_matrix((np.ones(len(r)), (r, c)), shape=(n, n))
        return (M + M.T).tocsr()

    return mat(g.pos_edges), mat(g.neg_edges)


def signed_modularity(g: SignedGraph, part: Partition) -> float:
    """Composite signed modularity of a partition.

    ``w+/(w+ + w-) Q+ - w-/(w+ + w-) Q-`` where ``Q+-`` are the ordinary
    modularities of the positive and negative subgraphs.
    """
    order = g.node_list()
    Ap, An = _signed_matrices(g, order)
    labels = np.array([part.assignment[u] for u in order])
    return _modularity(Ap, An, labels)


def _modularity(Ap, An, labels) -> float:
    two_wp, two_wn = Ap.sum(), An.sum()
    total = two_wp + two_wn
    if total == 0:
        return 0.0
    q = 0.0
    kp = np.asarray(Ap.sum(axis=1)).ravel()
    kn = np.asarray(An.sum(axis=1)).ravel()
    k = labels.max() + 1
    S = sp.csr_matrix((np.ones(len(labels)), (np.arange(len(labels)), labels)), shape=(len(labels), k))
    if two_wp > 0:
        inner = (S.T @ Ap @ S).diagonal().sum()
        tot = S.T @ kp
        q += inner - (tot ** 2).sum() / two_wp
    if two_wn > 0:
        inner = (S.T @ An @ S).diagonal().sum()
        tot = S.T @ kn
        q -= inner - (tot ** 2).sum() / two_wn
    return float(q / total)


def _local_moves(Ap, An, rng, tol=1e-12):
    """One Louvain level: greedy node moves until no improving move remains.

    ``Ap``/``An`` may carry self-loops (aggregated supernodes). Returns the
    community labels for this level and whether any node moved.
    """
    n = Ap.shape[0]
    kp = np.asarray(Ap.sum(axis=1)).ravel()
    kn = np.asarray(An.sum(axis=1)).ravel()
    two_wp, two_wn = kp.sum(), kn.sum()

    fp = 1.0 / two_wp if two_wp > 0 else 0.0
    fn = 1.0 / two_wn if two_wn > 0 else 0.0
    labels = np.arange(n)
    size = np.ones(n, dtype=int)
    tot_p = kp.copy()
    tot_n = kn.copy()
    Ap = Ap.tocsr()
    An = An.tocsr()
    moved_any = False
    improved = True
    while improved:
        improved = False
        for i in rng.permutation(n):
            ci = labels[i]
            links = {}
            for M, s in ((Ap, 1.0), (An, -1.0)):
                start, end = M.indptr[i], M.indptr[i + 1]
                for j, w in zip(M.indices[start:end], M.data[start:end]):
                    if j == i:
                        continue
                    c = labels[j]
                    links[c] = links.get(c, 0.0) + s * w
            # take i out of its community
            tot_p[ci] -= kp[i]
            tot_n[ci] -= kn[i]
            size[ci] -= 1

            def gain(c):
                return links.get(c, 0.0) - kp[i] * tot_p[c] * fp + kn[i] * tot_n[c] * fn

            best_c, best_g = ci, gain(ci)
            for c in sorted(links):
                g_c = gain(c)
                if g_c > best_g + tol:
                    best_c, best_g = c, g_c
            if best_g < -tol and size[ci] > 0:
                # isolating i beats every neighbouring community (gain 0)
                best_c = int(np.flatnonzero(size == 0)[0])
            tot_p[best_c] += kp[i]
            tot_n[best_c] += kn[i]
            size[best_c] += 1
            if best_c != ci:
                labels[i] = best_c
                improved = True
                moved_any = True
    _, labels = np.unique(labels, return_inverse=True)
    return labels, moved_any


def signed_louvain(g: SignedGraph, seed: int = 0, return_history: bool = False):
    """Multi-level Louvain maximizing signed modularity.

    Node visit order is shuffled with ``seed``. With ``return_history`` the
    signed modularity after each level is returned alongside the partition.
    """
    order = g.node_list()
    rng = np.random.default_rng(seed)
    Ap, An = _signed_matrices(g, order)
    node_labels = np.arange(len(order))
    history = [_modularity(Ap, An, node_labels)]
    cur_p, cur_n = Ap, An
    while True:
        labels, moved = _local_moves(cur_p, cur_n, rng)
        if not moved:
            break
        node_labels = labels[node_labels]
        k = labels.max() + 1
        S = sp.csr_matrix((np.ones(len(labels)), (np.arange(len(labels)), labels)), shape=(len(labels), k))
        cur_p = (S.T @ cur_p @ S).tocsr()
        cur_n = (S.T @ cur_n @ S).tocsr()
        history.append(_modularity(Ap, An, node_labels))
        if k == 1:
            break
    part = Partition.from_labels(order, node_labels)
    if return_history:
        return part, history
    return part


def default_min_size(n: int) -> int:
    return 500 if n > 50_000 else 30


def mode_smallest(counts) -> int:
    """Most common value; ties resolved towards the smaller value."""
    tally = Counter(counts)
    best = max(tally.values())
    return min(c for c, t in tally.items() if t == best)


def estimate_k(g: SignedGraph, runs: int = 10, min_size: Optional[int] = None) -> int:
    """Mode over ``runs`` Louvain runs of the number of communities with at least ``min_size`` nodes."""
    if runs < 1:
        raise CommunityError("runs must be >= 1")
    if min_size is None:
        min_size = default_min_size(g.n)
    if min_size < 1:
        raise CommunityError("min_size must be >= 1")
    counts = []
    for seed in range(runs):
        part = signed_louvain(g, seed=seed)
        counts.append(sum(1 for s in part.sizes() if s >= min_size))
    logger.debug("large-community counts per run: %s", counts)
    if max(counts) == 0:
        raise CommunityError(f"no run found a community with >= {min_size} nodes; lower min_size")
    return mode_smallest([c for c in counts])


def _kmeanspp(X, k, rng):
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centers.append(X[idx])
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def kmeans(X: np.ndarray, k: int, seed: int = 0, max_iter: int = 300, n_init: int = 10):
    """Lloyd's algorithm with k-means++ seeding, best of ``n_init`` restarts.

    Returns ``(labels, centers, objective_history)`` of the restart with the
    lowest final objective. Empty clusters are reseeded from the point
    farthest from its current centre.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if not (1 <= k <= n):
        raise CommunityError(f"k must satisfy 1 <= k <= n={n}, got {k}")
    if not np.all(np.isfinite(X)):
        raise CommunityError("k-means input has non-finite entries")
    rng = np.random.default_rng(seed)
    if k == n:
        return np.arange(n), X.copy(), [0.0]
    best = None
    for _ in range(max(1, n_init)):
        run = _lloyd(X, k, rng, max_iter)
        if best is None or run[2][-1] < best[2][-1] - 1e-12:
            best = run
    return best


def _lloyd(X, k, rng, max_iter):
    n = X.shape[0]
    centers = _kmeanspp(X, k, rng)
    labels = None
    history = []
    for _ in range(max_iter):
        dist = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = dist.argmin(axis=1)
        history.append(float(dist[np.arange(n), new].sum()))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            mask = labels == c
            if mask.any():
                centers[c] = X[mask].mean(axis=0)
        for c in range(k):
            if not np.any(labels == c):
                own = ((X - centers[labels]) ** 2).sum(axis=1)
                counts = np.bincount(labels, minlength=k)
                own[counts[labels] <= 1] = -1.0  # never empty another cluster
                far = int(own.argmax())
                labels[far] = c
                centers[c] = X[far]
        for c in range(k):
            centers[c] = X[labels == c].mean(axis=0)
    return labels, centers, history


def kmeans_partition(H, k: int, seed: int = 0) -> Partition:
    labels, _, _ = kmeans(H.values, k, seed)
    part = Partition.from_labels(H.node_order, labels)
    if part.k != k:
        raise CommunityError(f"k-means produced {part.k} communities instead of {k}")
    return part
