import io
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polman.graph import (EdgeRecord, GraphError, ParseError, SelfLoopWarning, SignedGraph, build_graph,
                          cumulative_snapshots, largest_connected_component, load_edge_list, read_edge_list,
                          split_edges, write_edge_list)


def recs(triples):
    return [EdgeRecord(u, v, s) for u, v, s in triples]


class TestLoad:
    def test_basic_tsv(self):
        out = load_edge_list(b"1\t2\t+1\n2\t3\t-1")
        assert [(r.u, r.v, r.sign) for r in out] == [(1, 2, 1), (2, 3, -1)]

    def test_self_loop_dropped_with_warning(self):
        with pytest.warns(SelfLoopWarning, match="dropped 1 self-loop"):
            out = load_edge_list("5\t5\t1\n1\t2\t1\n")
        assert len(out) == 1

    def test_ratings_and_comments(self):
        text = "# source target rating time\n1,2,10,100\n2,3,-3,101\n3,4,0,102\n"
        out = load_edge_list(text, "csv")
        assert [(r.sign, r.timestamp) for r in out] == [(1, 100), (-1, 101)]

    def test_errors(self):
        with pytest.raises(ParseError):
            load_edge_list("")
        with pytest.raises(ParseError) as exc:
            load_edge_list("1 2 1\n1 2\n")
        assert exc.value.line == 2
        with pytest.raises(ParseError):
            load_edge_list("1 2 x\n")
        with pytest.raises(ParseError):
            load_edge_list("1 2 nan\n")

    def test_string_ids(self):
        out = load_edge_list("alice bob 1\n")
        assert out[0].pair == ("alice", "bob")

    def test_roundtrip(self, tmp_path, clique_pair):
        p = tmp_path / "g.tsv"
        with open(p, "w") as fh:
            write_edge_list(clique_pair, fh, header="test")
        assert build_graph(read_edge_list(p)) == clique_pair


class TestBuild:
    def test_undirected_dedup(self):
        g = build_graph(recs([(1, 2, 1), (2, 1, 1)]))
        assert g.pos_edges == {(1, 2)} and not g.neg_edges

    def test_last_wins(self):
        g = build_graph(recs([(1, 2, 1), (1, 2, -1)]))
        assert g.neg_edges == {(1, 2)}

    def test_majority_and_drop(self):
        r = recs([(1, 2, -1), (2, 1, -1), (1, 2, 1), (3, 1, 1)])
        assert build_graph(r, "majority").neg_edges == {(1, 2)}
        dropped = build_graph(r, "drop")
        assert dropped.pos_edges == {(1, 3)} and not dropped.neg_edges
        assert dropped.nodes == {1, 2, 3}
        tie = recs([(1, 2, -1), (1, 2, 1)])
        assert build_graph(tie, "majority").pos_edges == {(1, 2)}

    def test_invariants_enforced(self):
        with pytest.raises(GraphError):
            SignedGraph.from_edges([(1, 2)], [(2, 1)])
        with pytest.raises(GraphError):
            EdgeRecord(1, 1, 1)
        with pytest.raises(GraphError):
            EdgeRecord(1, 2, 0)
        with pytest.raises(GraphError):
            build_graph([])


class TestLCC:
    def test_picks_largest(self):
        g = SignedGraph.from_edges([(0, 1), (1, 2), (2, 3), (3, 4), (10, 11)], [(11, 12)])
        assert largest_connected_component(g).nodes == {0, 1, 2, 3, 4}

    def test_identity_on_connected(self, clique_pair):
        assert largest_connected_component(clique_pair) is clique_pair

    def test_isolated_excluded(self):
        g = SignedGraph.from_edges([(1, 2)], nodes=[3])
        assert largest_connected_component(g).nodes == {1, 2}


class TestSplit:
    @pytest.mark.parametrize("m,sizes", [(100, (70, 15, 15)), (101, (71, 15, 15))])
    def test_sizes(self, m, sizes):
        r = recs([(i, i + 1, 1) for i in range(m)])
        s = split_edges(r, seed=3)
        assert (len(s.train_records), len(s.val), len(s.test)) == sizes

    def test_deterministic_partition(self):
        r = recs([(i, i + 1, 1 if i % 3 else -1) for i in range(50)])
        a, b = split_edges(r, seed=9), split_edges(r, seed=9)
        assert a == b
        parts = [set(x) for x in (a.train_records, a.val, a.test)]
        assert sum(len(p) for p in parts) == len(r)
        assert set().union(*parts) == set(r)

    def test_rejects_bad_ratios(self):
        r = recs([(i, i + 1, 1) for i in range(20)])
        with pytest.raises(GraphError):
            split_edges(r, (0.5, 0.5, 0.5))


class TestSnapshots:
    def test_quantile_cuts(self):
        r = [EdgeRecord(i, i + 1, 1, timestamp=i) for i in range(1, 5)]
        seq = cumulative_snapshots(r, 2)
        assert [s.num_edges for s in seq.snapshots] == [2, 4]

    def test_needs_two(self):
        r = [EdgeRecord(1, 2, 1, timestamp=0)]
        with pytest.raises(GraphError):
            cumulative_snapshots(r, 1)

    def test_count_binning(self):
        r = [EdgeRecord(i, i + 1, 1, timestamp=t) for i, t in enumerate([0, 1, 2, 3, 100, 101, 102, 103])]
        seq = cumulative_snapshots(r, 2, binning="count")
        assert seq.snapshots[0].num_edges == 4


edge_lists = st.lists(st.tuples(st.integers(0, 15), st.integers(0, 15), st.sampled_from([1, -1]),
                                st.integers(0, 50)),
                      min_size=1, max_size=60).map(lambda xs: [x for x in xs if x[0] != x[1]]).filter(bool)


@settings(max_examples=60, deadline=None)
@given(edge_lists)
def test_graph_and_lcc_properties(rows):
    r = [EdgeRecord(u, v, s, timestamp=t) for u, v, s, t in rows]
    g = build_graph(r)
    assert not (g.pos_edges & g.neg_edges)
    assert all(u < v and u in g.nodes and v in g.nodes for u, v in g.pos_edges | g.neg_edges)
    assert largest_connected_component(g).is_connected()


@settings(max_examples=40, deadline=None)
@given(edge_lists, st.integers(2, 6), st.sampled_from(["time", "count"]))
def test_snapshots_nested(rows, k, binning):
    r = [EdgeRecord(u, v, s, timestamp=t) for u, v, s, t in rows]
    seq = cumulative_snapshots(r, k, binning)
    pairs = [s.pos_edges | s.neg_edges for s in seq.snapshots]
    assert all(a <= b for a, b in zip(pairs, pairs[1:]))
    assert pairs[-1] == (build_graph(r).pos_edges | build_graph(r).neg_edges)
