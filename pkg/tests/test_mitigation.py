import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polman.community import Partition, kmeans_partition
from polman.embedding import AlignedEmbedding, align, spectral_signed_embedding
from polman.graph import SignedGraph
from polman.mitigation import (AugmentationBudget, GrayZone, MitigationError, MitigationParams,
                               augment_pair, budgets, community_centroids, gray_distance, gray_zone,
                               mitigate, positive_edge_stats)
from polman.synthetic import two_clique_graph


def aligned(order, values):
    return AlignedEmbedding(tuple(order), np.asarray(values, dtype=float), 1.0)


def check_structure(g, g2, plan, part):
    """Original edges kept with sign, only positive additions, none joining C_i and C_j."""
    assert g2.nodes == g.nodes
    assert g.pos_edges <= g2.pos_edges and g.neg_edges == g2.neg_edges
    added = g2.pos_edges - g.pos_edges
    assert added == set(plan.added_edges)
    assert len(plan.added_edges) == len(added)
    assert g2.num_edges == g.num_edges + sum(len(a.edges) for a in plan.augmentations)
    for a in plan.augmentations:
        i, j = a.pair
        zone = set(a.zone.nodes)
        for u, v in a.edges:
            assert u in zone or v in zone
            assert {part.assignment[u], part.assignment[v]} != {i, j}


class TestGeometry:
    def test_centroids(self):
        part = Partition({0: 0, 1: 1, 2: 1}, 2)
        Z = aligned([0, 1, 2], [[5.0, 5.0], [0.0, 0.0], [2.0, 2.0]])
        assert np.allclose(community_centroids(Z, part), [[5, 5], [1, 1]])
        Zp = aligned([0, 2, 1], [[5.0, 5.0], [2.0, 2.0], [0.0, 0.0]])
        assert np.array_equal(community_centroids(Z, part), community_centroids(Zp, part))

    def test_gray_distance(self):
        assert gray_distance([0, 0], [1, 0], [-1, 0]) == 1.0
        assert gray_distance([0, 0], [3, 0], [0, 1]) == 5.0
        assert gray_distance([0.3, 2], [4, 1], [-1, 7]) == gray_distance([0.3, 2], [-1, 7], [4, 1])
        with pytest.raises(MitigationError):
            gray_distance([0], [1, 2], [3, 4])

    def test_zone_size_and_order(self):
        labels = {u: u // 4 for u in range(12)}
        part = Partition(labels, 3)
        rows = [[-5, 0]] * 4 + [[5, 0]] * 4 + [[0, 0.1], [0, 9], [0, 3], [0, 1]]
        Z = aligned(range(12), rows)
        zone = gray_zone(SignedGraph.from_edges([(0, 1)], nodes=range(12)), Z, part, (0, 1))
        assert zone.m == 4
        assert zone.nodes == (8, 11, 10, 9)

    def test_zone_capped_by_candidates(self):
        part = Partition({u: (0 if u < 5 else 1 if u < 10 else 2) for u in range(12)}, 3)
        Z = aligned(range(12), np.arange(24.0).reshape(12, 2))
        zone = gray_zone(SignedGraph.from_edges([(0, 1)], nodes=range(12)), Z, part, (0, 1))
        assert zone.m == 4 and len(zone.nodes) == 2


class TestBudgets:
    def test_stats(self):
        pos = [(u, v) for u, v in itertools.combinations(range(5), 2)]  # 10 in community 0
        pos += [(5, 6), (5, 7), (5, 8), (6, 7), (6, 8), (7, 8)]  # 6 in community 1
        pos += [(0, 5), (1, 6), (2, 7), (3, 8)]  # 4 crossing
        neg = [(4, 5), (4, 6)]
        g = SignedGraph.from_edges(pos, neg)
        part = Partition({u: int(u >= 5) for u in range(9)}, 2)
        assert positive_edge_stats(g, part) == (8.0, 4.0)

    def test_arithmetic(self):
        b = budgets((10.0, 4.0), 1.0)
        assert (b.b_gg, b.b_gi, b.b_gj) == (10, 2, 2)
        assert budgets((3.0, 4.0), 0.5).b_gg == 1
        b = budgets((3.0, 1.0), 1.0)
        assert (b.b_gi, b.b_gj) == (0, 0)
        with pytest.raises(MitigationError):
            budgets((3.0, 1.0), 0.0)


class TestAugment:
    def _setup(self):
        part = Partition({u: u // 3 for u in range(9)}, 3)
        g = SignedGraph.from_edges([(0, 1), (1, 2), (3, 4), (4, 5), (6, 0)], [(2, 3)], nodes=range(9))
        return g, part

    def test_exhaust_zone(self):
        g, part = self._setup()
        zone = GrayZone((0, 1), (6, 7, 8), 3)
        aug = augment_pair(g, zone, part, (0, 1), AugmentationBudget(3, 0, 0, 1.0, 3, 0), seed=1)
        assert sorted(aug.e_gg) == [(6, 7), (6, 8), (7, 8)] and not aug.shortfall

    def test_zero_budget_and_exclusion(self):
        g, part = self._setup()
        zone = GrayZone((0, 1), (6, 7, 8), 3)
        for seed in range(20):
            aug = augment_pair(g, zone, part, (0, 1), AugmentationBudget(0, 8, 2, 1.0, 0, 16), seed=seed)
            assert aug.e_gg == []
            assert (0, 6) not in aug.e_gi
            assert len(aug.e_gi) == 8 and len(set(aug.e_gi)) == 8
            assert all(p[0] in (0, 1, 2) and p[1] in (6, 7, 8) for p in aug.e_gi)

    def test_shortfall_reported(self):
        g, part = self._setup()
        zone = GrayZone((0, 1), (6, 7, 8), 3)
        aug = augment_pair(g, zone, part, (0, 1), AugmentationBudget(5, 0, 0, 1.0, 5, 0), seed=0)
        assert len(aug.e_gg) == 3 and aug.shortfall == {"gg": 2}


def _pipeline_inputs(seed=0, k=3):
    g = two_clique_graph(seed)
    H = spectral_signed_embedding(g, 8, seed)
    Z = align(H, k)
    part = kmeans_partition(H, k, seed)
    return g, H, Z, part


class TestMitigate:
    def test_tau_one_is_noop(self):
        g, H, Z, part = _pipeline_inputs()
        g2, plan = mitigate(g, H, Z, part, MitigationParams(tau=1.0))
        assert g2 == g and plan.added_edges == [] and plan.selected_pairs == []

    @pytest.mark.parametrize("seed", range(3))
    @pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
    def test_structure_and_budgets(self, seed, gamma):
        g, H, Z, part = _pipeline_inputs(seed)
        g2, plan = mitigate(g, H, Z, part, MitigationParams(tau=0.0, gamma=gamma, seed=seed))
        assert plan.selected_pairs
        check_structure(g, g2, plan, part)
        intra, inter = positive_edge_stats(g, part)
        for a in plan.augmentations:
            if not a.shortfall:
                assert len(a.e_gg) == math.floor(gamma * intra)
                assert len(a.e_gi) == len(a.e_gj) == math.floor(gamma * inter / 2)

    def test_deterministic(self):
        g, H, Z, part = _pipeline_inputs(1)
        a = mitigate(g, H, Z, part, MitigationParams(tau=0.0, seed=4))[1]
        b = mitigate(g, H, Z, part, MitigationParams(tau=0.0, seed=4))[1]
        assert a.to_dict() == b.to_dict()

    def test_plan_budget_matches_arithmetic(self):
        g, H, Z, part = _pipeline_inputs(2)
        plan = mitigate(g, H, Z, part, MitigationParams(tau=0.0, gamma=1.5))[1].to_dict()
        b = plan["budget"]
        assert b["b_gg"] == math.floor(1.5 * b["e_intra_avg"])
        assert b["b_gi"] == b["b_gj"] == math.floor(1.5 * b["e_inter_avg"] / 2)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.2, 3.0), st.integers(2, 4), st.integers(1, 3))
def test_mitigation_structure_property(seed, gamma, k, d_max):
    g, H, Z, part = _pipeline_inputs(seed % 50, k)
    g2, plan = mitigate(g, H, Z, part, MitigationParams(tau=0.0, gamma=gamma, d_max=d_max, seed=seed))
    check_structure(g, g2, plan, part)
