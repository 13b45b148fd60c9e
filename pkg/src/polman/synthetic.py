"""Synthetic signed networks used as fixtures and demos."""
from __future__ import annotations

import itertools

import numpy as np

from .graph import EdgeRecord, SignedGraph, build_graph, canonical_pair


def two_clique_graph(seed: int = 0, clique_size: int = 15, bridges: int = 10,
                     outsiders: int = 10, outsider_links: int = 2,
                     outsider_density: float = 0.5) -> SignedGraph:
    """Two positive cliques joined only by negative bridges, plus neutral outsiders.

    Outsiders form a positive ring plus random chords of density
    ``outsider_density`` among themselves, and each holds ``outsider_links``
    positive ties into each clique.
    """
    rng = np.random.default_rng(seed)
    a = list(range(clique_size))
    b = list(range(clique_size, 2 * clique_size))
    o = list(range(2 * clique_size, 2 * clique_size + outsiders))
    pos = set(itertools.combinations(a, 2)) | set(itertools.combinations(b, 2))
    cross = [(u, v) for u in a for v in b]
    neg = {cross[t] for t in rng.choice(len(cross), size=bridges, replace=False)}
    if outsiders > 1:
        for t in range(outsiders):
            u, v = o[t], o[(t + 1) % outsiders]
            if u != v:
                pos.add(canonical_pair(u, v))
        for u, v in itertools.combinations(o, 2):
            if rng.random() < outsider_density:
                pos.add((u, v))
    for u in o:
        for side in (a, b):
            for v in rng.choice(side, size=outsider_links, replace=False):
                pos.add(canonical_pair(u, int(v)))
    return SignedGraph.from_edges(pos, neg)


def random_signed_graph(n: int, p: float, neg_frac: float = 0.3, seed: int = 0) -> SignedGraph:
    """Erdos-Renyi signed graph made connected by a random spanning path."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    pairs = {canonical_pair(int(perm[t]), int(perm[t + 1])) for t in range(n - 1)}
    iu, ju = np.triu_indices(n, 1)
    mask = rng.random(len(iu)) < p
    pairs |= {(int(i), int(j)) for i, j in zip(iu[mask], ju[mask])}
    pairs = sorted(pairs)
    signs = rng.random(len(pairs)) < neg_frac
    neg = [e for e, s in zip(pairs, signs) if s]
    pos = [e for e, s in zip(pairs, signs) if not s]
    return SignedGraph.from_edges(pos, neg, nodes=range(n))


def growing_factions(n: int = 500, seed: int = 0, m_pos: int = 3, m_neg: int = 1,
                     seed_size: int = 4) -> list:
    """Timestamped records of a two-faction network grown one node at a time.

    Each arriving node joins a random faction and links positively to
    ``m_pos`` earlier members of its own faction and negatively to ``m_neg``
    members of the other. The edge timestamp is the arrival step.
    """
    rng = np.random.default_rng(seed)
    faction = {}
    members = ([], [])
    records = []
    for u in range(seed_size * 2):
        f = u % 2
        for v in members[f]:
            records.append(EdgeRecord(v, u, 1, timestamp=0))
        for v in members[1 - f][:1]:
            records.append(EdgeRecord(v, u, -1, timestamp=0))
        faction[u] = f
        members[f].append(u)
    for u in range(seed_size * 2, n):
        f = int(rng.integers(2))
        own, other = members[f], members[1 - f]
        for v in rng.choice(own, size=min(m_pos, len(own)), replace=False):
            records.append(EdgeRecord(int(v), u, 1, timestamp=u))
        for v in rng.choice(other, size=min(m_neg, len(other)), replace=False):
            records.append(EdgeRecord(int(v), u, -1, timestamp=u))
        faction[u] = f
        members[f].append(u)
    return records


def faction_graph(n: int = 500, seed: int = 0, **kw) -> SignedGraph:
    return build_graph(growing_factions(n, seed, **kw))


def trust_network(n: int = 3783, m: int = 14124, neg_frac: float = 0.1, seed: int = 0) -> list:
    """Sparse heavy-tailed signed network of exactly ``n`` nodes and ``m`` edges.

    A random preferential-attachment tree guarantees connectivity; the
    remaining edges pick both endpoints proportionally to degree + 1.
    Returns records with arrival-order timestamps.
    """
    if not (n - 1 <= m <= n * (n - 1) // 2):
        raise ValueError("edge count out of range for a connected simple graph")
    rng = np.random.default_rng(seed)
    deg = np.zeros(n)
    pairs = []
    seen = set()
    for u in range(1, n):
        w = deg[:u] + 1.0
        v = int(rng.choice(u, p=w / w.sum()))
        pairs.append((v, u))
        seen.add((v, u))
        deg[u] += 1
        deg[v] += 1
    while len(pairs) < m:
        w = deg + 1.0
        batch = rng.choice(n, size=(2 * (m - len(pairs)), 2), p=w / w.sum())
        for a, b in batch:
            if a == b:
                continue
            p = canonical_pair(int(a), int(b))
            if p in seen:
                continue
            seen.add(p)
            pairs.append(p)
            deg[list(p)] += 1
            if len(pairs) == m:
                break
    signs = np.where(rng.random(m) < neg_frac, -1, 1)
    return [EdgeRecord(u, v, int(s), timestamp=t) for t, ((u, v), s) in enumerate(zip(pairs, signs))]


def planted_partition(groups: int = 4, size: int = 40, p_in: float = 0.1, p_out: float = 0.01,
                      neg_in: float = 0.05, neg_out: float = 0.7, seed: int = 0) -> SignedGraph:
    """Sparse signed planted-partition graph, made connected by a random spanning path."""
    rng = np.random.default_rng(seed)
    n = groups * size
    block = np.arange(n) // size
    perm = rng.permutation(n)
    pairs = {canonical_pair(int(perm[t]), int(perm[t + 1])) for t in range(n - 1)}
    iu, ju = np.triu_indices(n, 1)
    same = block[iu] == block[ju]
    mask = rng.random(len(iu)) < np.where(same, p_in, p_out)
    pairs |= {(int(i), int(j)) for i, j in zip(iu[mask], ju[mask])}
    pos, neg = [], []
    for u, v in sorted(pairs):
        q = neg_in if block[u] == block[v] else neg_out
        (neg if rng.random() < q else pos).append((u, v))
    return SignedGraph.from_edges(pos, neg, nodes=range(n))
