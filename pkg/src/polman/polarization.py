"""Embedding-aware polarization scores built on effective-resistance energies."""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .community import Partition
from .embedding import AlignedEmbedding
from .graph import SignedGraph
from .spectral import ScaledLaplacian, SolverConfig, quad_form, signed_laplacian

logger = logging.getLogger(__name__)


class PolarizationError(ValueError):
    pass


@dataclass(frozen=True)
class PolarizationReport:
    score: float
    per_dimension_energy: tuple
    eta: float
    k: int

    def to_dict(self) -> dict:
        return {"eta": self.eta, "k": self.k, "score": self.score,
                "energies": list(self.per_dimension_energy)}


def dimension_energy(L: ScaledLaplacian, z_col, config: SolverConfig = SolverConfig()) -> float:
    """Effective-resistance energy ``z^T L^+ z`` of one embedding axis."""
    return quad_form(L, z_col, config)


def _energies(L: ScaledLaplacian, Z: np.ndarray, config: SolverConfig) -> tuple:
    return tuple(dimension_energy(L, Z[:, j], config) for j in range(Z.shape[1]))


def network_polarization(L: ScaledLaplacian, Zhat: AlignedEmbedding,
                         config: SolverConfig = SolverConfig()) -> PolarizationReport:
    """Root-mean dimension energy of the aligned embedding over ``L``."""
    if tuple(Zhat.node_order) != tuple(L.node_order):
        raise PolarizationError("embedding and Laplacian node orders differ")
    energies = _energies(L, Zhat.values, config)
    return PolarizationReport(math.sqrt(sum(energies) / len(energies)), energies, L.eta, len(energies))


def measure(g: SignedGraph, Zhat: AlignedEmbedding, eta: float,
            config: SolverConfig = SolverConfig()) -> PolarizationReport:
    """Build the scaled Laplacian on the embedding's node order and score it."""
    L = signed_laplacian(g, eta, node_order=Zhat.node_order)
    return network_polarization(L, Zhat, config)


def _pairwise(g, Zhat, part, i, j, eta, config):
    if i == j:
        raise PolarizationError("pairwise polarization needs two distinct communities")
    nodes = set(part.members(i)) | set(part.members(j))
    sub = g.subgraph(nodes)
    comps = sub.components()
    restricted = len(comps) > 1
    if restricted:
        sub = sub.subgraph(comps[0])
    if sub.n < 2:
        raise PolarizationError(f"induced subgraph of pair ({i}, {j}) has fewer than 2 nodes")
    order = tuple(sub.node_list())
    Z = Zhat.rows(order)
    Z = Z - Z.mean(axis=0)
    L = signed_laplacian(sub, eta, node_order=order)
    energies = _energies(L, Z, config)
    return math.sqrt(sum(energies) / len(energies)), restricted


def pairwise_polarization(g: SignedGraph, Zhat: AlignedEmbedding, part: Partition, i: int, j: int,
                          eta: float, config: SolverConfig = SolverConfig()) -> float:
    """Polarization of the subgraph induced by communities ``i`` and ``j``.

    The induced subgraph is cut down to its largest connected component and
    the restricted embedding rows are column-centred before scoring.
    """
    return _pairwise(g, Zhat, part, i, j, eta, config)[0]


@dataclass
class PairScoreTable:
    entries: dict = field(default_factory=dict)  # (i, j) -> raw score
    restricted: dict = field(default_factory=dict)  # (i, j) -> bool

    def add(self, i: int, j: int, raw: float, restricted: bool = False):
        key = (min(i, j), max(i, j))
        self.entries[key] = float(raw)
        self.restricted[key] = bool(restricted)

    def normalized(self) -> dict:
        """Min-max normalized scores; all equal to 1.0 when the raw scores coincide."""
        if not self.entries:
            return {}
        lo, hi = min(self.entries.values()), max(self.entries.values())
        if hi - lo <= 1e-12 * max(abs(hi), 1.0):
            return {p: 1.0 for p in self.entries}
        return {p: (s - lo) / (hi - lo) for p, s in self.entries.items()}

    def to_rows(self, selected=()) -> list:
        norm = self.normalized()
        sel = set(selected)
        return [{"i": i, "j": j, "raw": self.entries[(i, j)], "normalized": norm[(i, j)],
                 "selected": (i, j) in sel, "restricted": self.restricted.get((i, j), False)}
                for i, j in sorted(self.entries)]


def score_pairs(g: SignedGraph, Zhat: AlignedEmbedding, part: Partition, pairs, eta: float,
                config: SolverConfig = SolverConfig()) -> PairScoreTable:
    table = PairScoreTable()
    for i, j in pairs:
        try:
            raw, restricted = _pairwise(g, Zhat, part, i, j, eta, config)
        except PolarizationError as exc:
            logger.warning("skipping pair (%d, %d): %s", i, j, exc)
            continue
        if restricted:
            logger.info("pair (%d, %d) scored on the largest component of its induced subgraph", i, j)
        table.add(i, j, raw, restricted)
    return table


def all_pairs(part: Partition) -> list:
    return list(itertools.combinations(range(part.k), 2))


def prune_candidate_pairs(part: Partition, Zhat: AlignedEmbedding, top_n: int = 50,
                          min_community: int = 1000) -> list:
    """Keep the ``top_n`` most distant pairs (by centroid distance) among large communities."""
    sizes = part.sizes()
    big = [c for c in range(part.k) if sizes[c] >= min_community]
    cents = {}
    for c in big:
        cents[c] = Zhat.rows(part.members(c)).mean(axis=0)
    scored = [(float(np.linalg.norm(cents[i] - cents[j])), i, j)
              for i, j in itertools.combinations(big, 2)]
    scored.sort(key=lambda t: (-t[0], t[1], t[2]))
    return [(i, j) for _, i, j in scored[:top_n]]


def select_polarized_pairs(table: PairScoreTable, tau: float, d_max: int) -> list:
    """Greedy selection by descending normalized score.

    A pair is taken when its normalized score strictly exceeds ``tau`` and
    neither community has already been used ``d_max`` times.
    """
    if not (0.0 <= tau <= 1.0):
        raise PolarizationError(f"tau must lie in [0, 1], got {tau}")
    if d_max < 1:
        raise PolarizationError(f"d_max must be >= 1, got {d_max}")
    norm = table.normalized()
    ranked = sorted(norm.items(), key=lambda kv: (-kv[1], kv[0]))
    used = {}
    chosen = []
    for (i, j), s in ranked:
        if s <= tau:
            break
        if used.get(i, 0) < d_max and used.get(j, 0) < d_max:
            chosen.append((i, j))
            used[i] = used.get(i, 0) + 1
            used[j] = used.get(j, 0) + 1
    return chosen


def _opinion_array(L: ScaledLaplacian, o) -> np.ndarray:
    if isinstance(o, Mapping):
        try:
            arr = L.vector(o)
        except KeyError as exc:
            raise PolarizationError(f"no opinion for node {exc.args[0]!r}") from None
    else:
        arr = np.asarray(o, dtype=float)
        if arr.shape != (L.n,):
            raise PolarizationError("opinion vector length does not match the graph")
    if np.any(np.abs(arr) > 1.0 + 1e-12):
        raise PolarizationError("opinions must lie in [-1, 1]")
    return arr


def opinion_polarization(L: ScaledLaplacian, o, config: SolverConfig = SolverConfig()) -> float:
    """``sqrt((o+ - o-)^T L^+ (o+ - o-))`` for a scalar opinion vector."""
    arr = _opinion_array(L, o)
    diff = np.maximum(arr, 0.0) - np.maximum(-arr, 0.0)
    return math.sqrt(quad_form(L, diff, config))


def multiopinion_polarization(L: ScaledLaplacian, opinions: Sequence,
                              config: SolverConfig = SolverConfig()) -> float:
    """Root of the mean quadratic form over all pairs of opinion vectors."""
    if len(opinions) < 2:
        raise PolarizationError("need at least two opinion vectors")
    arrs = [_opinion_array(L, o) for o in opinions]
    vals = [quad_form(L, a - b, config) for a, b in itertools.combinations(arrs, 2)]
    return math.sqrt(sum(vals) / len(vals))
