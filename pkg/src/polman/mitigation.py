"""Gray-zone identification and budgeted positive-edge augmentation."""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .community import Partition
from .embedding import AlignedEmbedding
from .graph import SignedGraph, canonical_pair
from .polarization import (PairScoreTable, all_pairs, prune_candidate_pairs, score_pairs,
                           select_polarized_pairs)
from .spectral import SolverConfig

logger = logging.getLogger(__name__)


class MitigationError(ValueError):
    pass


@dataclass(frozen=True)
class GrayZone:
    pair: tuple
    nodes: tuple
    m: int


@dataclass(frozen=True)
class AugmentationBudget:
    b_gg: int
    b_gi: int
    b_gj: int
    gamma: float
    e_intra_avg: float
    e_inter_avg: float


@dataclass
class PairAugmentation:
    pair: tuple
    zone: GrayZone
    e_gg: list
    e_gi: list
    e_gj: list
    shortfall: dict

    @property
    def edges(self) -> list:
        return self.e_gg + self.e_gi + self.e_gj


@dataclass
class MitigationPlan:
    selected_pairs: list
    budget: Optional[AugmentationBudget]
    augmentations: list = field(default_factory=list)
    scores: Optional[PairScoreTable] = None
    seed: int = 0
    skipped_pairs: list = field(default_factory=list)

    @property
    def gray_zones(self) -> list:
        return [a.zone for a in self.augmentations]

    @property
    def added_edges(self) -> list:
        return [e for a in self.augmentations for e in a.edges]

    def to_dict(self) -> dict:
        b = self.budget
        return {
            "seed": self.seed,
            "selected_pairs": [list(p) for p in self.selected_pairs],
            "skipped_pairs": [list(p) for p in self.skipped_pairs],
            "budget": None if b is None else {
                "gamma": b.gamma, "e_intra_avg": b.e_intra_avg, "e_inter_avg": b.e_inter_avg,
                "b_gg": b.b_gg, "b_gi": b.b_gi, "b_gj": b.b_gj},
            "pairs": [] if self.scores is None else self.scores.to_rows(self.selected_pairs),
            "augmentations": [{
                "pair": list(a.pair),
                "gray_zone": list(a.zone.nodes),
                "m": a.zone.m,
                "E_gg": [list(e) for e in a.e_gg],
                "E_gi": [list(e) for e in a.e_gi],
                "E_gj": [list(e) for e in a.e_gj],
                "shortfall": a.shortfall,
            } for a in self.augmentations],
            "num_added_edges": len(self.added_edges),
        }


def community_centroids(Zhat: AlignedEmbedding, part: Partition) -> np.ndarray:
    cents = []
    for i, members in enumerate(part.communities()):
        if not members:
            raise MitigationError(f"community {i} is empty")
        cents.append(Zhat.rows(members).mean(axis=0))
    return np.array(cents)


def gray_distance(z_v, mu_i, mu_j) -> float:
    """Imbalance plus remoteness of a node relative to two centroids."""
    z_v, mu_i, mu_j = (np.asarray(x, dtype=float) for x in (z_v, mu_i, mu_j))
    if not (z_v.shape == mu_i.shape == mu_j.shape):
        raise MitigationError("vectors must share one dimension")
    d_i = float(np.linalg.norm(z_v - mu_i))
    d_j = float(np.linalg.norm(z_v - mu_j))
    return abs(d_i - d_j) + max(d_i, d_j)


def gray_zone(g: SignedGraph, Zhat: AlignedEmbedding, part: Partition, pair,
              centroids: Optional[np.ndarray] = None) -> GrayZone:
    """The ``m`` outside nodes of smallest gray distance, ``m`` being the mean community size."""
    i, j = pair
    if centroids is None:
        centroids = community_centroids(Zhat, part)
    m = math.ceil(sum(part.sizes()) / part.k)
    excluded = {i, j}
    candidates = sorted(u for u, c in part.assignment.items() if c not in excluded)
    if not candidates:
        raise MitigationError(f"no gray-zone candidates outside communities {i} and {j}")
    Z = Zhat.rows(candidates)
    d_i = np.linalg.norm(Z - centroids[i], axis=1)
    d_j = np.linalg.norm(Z - centroids[j], axis=1)
    s = np.abs(d_i - d_j) + np.maximum(d_i, d_j)
    ranked = sorted(zip(s.tolist(), candidates))
    return GrayZone((i, j), tuple(u for _, u in ranked[:m]), m)


def positive_edge_stats(g: SignedGraph, part: Partition) -> tuple:
    """Mean positive edge count within communities and between community pairs."""
    k = part.k
    if k < 2:
        raise MitigationError("inter-community statistics need at least two communities")
    counts = np.zeros((k, k))
    for u, v in g.pos_edges:
        if u in part.assignment and v in part.assignment:
            a, b = part.assignment[u], part.assignment[v]
            counts[min(a, b), max(a, b)] += 1
    intra = float(np.trace(counts)) / k
    inter = float(np.triu(counts, 1).sum()) * 2.0 / (k * (k - 1))
    return intra, inter


def budgets(stats, gamma: float) -> AugmentationBudget:
    if gamma <= 0:
        raise MitigationError(f"gamma must be positive, got {gamma}")
    intra, inter = stats
    b_gg = int(math.floor(gamma * intra + 1e-9))
    b_g = int(math.floor(gamma * inter / 2.0 + 1e-9))
    return AugmentationBudget(b_gg, b_g, b_g, float(gamma), float(intra), float(inter))


def _sample_pairs(pool_size, draw, enumerate_all, budget, taken, rng):
    """Sample up to ``budget`` new pairs; returns (pairs, shortfall)."""
    if budget <= 0:
        return [], 0
    out = []
    if budget * 4 < pool_size:
        attempts = 0
        while len(out) < budget and attempts < 50 * budget:
            attempts += 1
            p = draw(rng)
            if p is None or p in taken:
                continue
            taken.add(p)
            out.append(p)
        if len(out) == budget:
            return out, 0
    pool = [p for p in enumerate_all() if p not in taken]
    need = budget - len(out)
    if len(pool) <= need:
        chosen = pool
    else:
        idx = np.sort(rng.choice(len(pool), size=need, replace=False))
        chosen = [pool[t] for t in idx]
    taken.update(chosen)
    out.extend(chosen)
    return out, budget - len(out)


def augment_pair(g: SignedGraph, zone: GrayZone, part: Partition, pair, budget: AugmentationBudget,
                 seed=0, taken: Optional[set] = None) -> PairAugmentation:
    """Sample unconnected positive pairs inside the zone and from the zone to each community.

    ``taken`` holds pairs that must not be produced (existing edges and
    edges already sampled for other pairs); it is updated in place.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if taken is None:
        taken = set(g.pos_edges) | set(g.neg_edges)
    zone_nodes = list(zone.nodes)
    if not zone_nodes:
        raise MitigationError("gray zone is empty")
    i, j = pair

    def within():
        return (canonical_pair(a, b) for a, b in itertools.combinations(sorted(zone_nodes), 2))

    def draw_within(r):
        if len(zone_nodes) < 2:
            return None
        a, b = r.choice(len(zone_nodes), size=2, replace=False)
        return canonical_pair(zone_nodes[a], zone_nodes[b])

    def across(members):
        return lambda: (canonical_pair(a, b) for a in sorted(zone_nodes) for b in members)

    def draw_across(members):
        def draw(r):
            return canonical_pair(zone_nodes[r.integers(len(zone_nodes))], members[r.integers(len(members))])
        return draw

    m = len(zone_nodes)
    e_gg, short_gg = _sample_pairs(m * (m - 1) // 2, draw_within, within, budget.b_gg, taken, rng)
    mem_i, mem_j = part.members(i), part.members(j)
    e_gi, short_gi = _sample_pairs(m * len(mem_i), draw_across(mem_i), across(mem_i), budget.b_gi, taken, rng)
    e_gj, short_gj = _sample_pairs(m * len(mem_j), draw_across(mem_j), across(mem_j), budget.b_gj, taken, rng)
    shortfall = {k: v for k, v in (("gg", short_gg), ("gi", short_gi), ("gj", short_gj)) if v}
    if shortfall:
        logger.info("pair %s: budget shortfall %s", pair, shortfall)
    return PairAugmentation((i, j), zone, e_gg, e_gi, e_gj, shortfall)


@dataclass(frozen=True)
class MitigationParams:
    eta: float = 0.1
    tau: float = 0.6
    d_max: int = 2
    gamma: float = 1.0
    seed: int = 0
    top_n: int = 50
    min_community: int = 1000
    prune: Optional[bool] = None  # None: prune only when n > 50,000


def mitigate(g: SignedGraph, H, Zhat: AlignedEmbedding, part: Partition,
             params: MitigationParams = MitigationParams(),
             config: SolverConfig = SolverConfig()) -> tuple:
    """Score community pairs, pick polarized ones and add gray-zone edges.

    Returns ``(augmented_graph, plan)``. ``H`` is accepted for interface
    symmetry with the partition step and is not otherwise used.
    """
    prune = params.prune if params.prune is not None else g.n > 50_000
    if prune:
        candidates = prune_candidate_pairs(part, Zhat, params.top_n, params.min_community)
    else:
        candidates = all_pairs(part)
    table = score_pairs(g, Zhat, part, candidates, params.eta, config)
    selected = select_polarized_pairs(table, params.tau, params.d_max) if table.entries else []
    plan = MitigationPlan(selected, None, scores=table, seed=params.seed)
    if not selected:
        logger.warning("no community pair selected for mitigation; graph left unchanged")
        return g, plan

    plan.budget = budgets(positive_edge_stats(g, part), params.gamma)
    centroids = community_centroids(Zhat, part)
    rng = np.random.default_rng(params.seed)
    taken = set(g.pos_edges) | set(g.neg_edges)
    for pair in sorted(selected):
        try:
            zone = gray_zone(g, Zhat, part, pair, centroids)
        except MitigationError as exc:
            logger.warning("skipping pair %s: %s", pair, exc)
            plan.skipped_pairs.append(pair)
            continue
        plan.augmentations.append(augment_pair(g, zone, part, pair, plan.budget, rng, taken))
    return g.with_positive_edges(plan.added_edges), plan
