import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import complete_graph, dense_quad, path_graph
from polman.graph import SignedGraph
from polman.spectral import (DisconnectedGraphError, SolverConfig, SolverError, dense_pseudoinverse,
                             effective_resistance, quad_form, quad_forms, scaled_adjacency, signed_laplacian)
from polman.synthetic import random_signed_graph


class TestAdjacency:
    def test_positive_and_negative_weights(self):
        pos = SignedGraph.from_edges([(1, 2)])
        neg = SignedGraph.from_edges((), [(1, 2)])
        assert scaled_adjacency(pos, 0.1)[0, 1] == 1.0
        assert scaled_adjacency(neg, 0.1)[0, 1] == pytest.approx(0.1)

    def test_eta_one_is_unsigned(self):
        g = random_signed_graph(20, 0.2, 0.5, seed=1)
        A = scaled_adjacency(g, 1.0).toarray()
        assert set(np.unique(A)) <= {0.0, 1.0}
        assert A.sum() == 2 * g.num_edges

    @pytest.mark.parametrize("eta", [0.0, -0.1, 1.5, float("nan")])
    def test_eta_domain(self, eta):
        with pytest.raises(ValueError):
            scaled_adjacency(path_graph(3), eta)


class TestLaplacian:
    def test_hand_cases(self):
        L = signed_laplacian(SignedGraph.from_edges([(1, 2)]), 0.1).matrix.toarray()
        assert np.array_equal(L, [[1, -1], [-1, 1]])
        L = signed_laplacian(SignedGraph.from_edges((), [(1, 2)]), 0.5).matrix.toarray()
        assert np.allclose(L, [[0.5, -0.5], [-0.5, 0.5]])
        tri = SignedGraph.from_edges([(1, 3), (2, 3)], [(1, 2)])
        assert np.allclose(signed_laplacian(tri, 0.1).degrees, [1.1, 1.1, 2.0])

    def test_structure(self):
        g = random_signed_graph(40, 0.2, 0.4, seed=5)
        lap = signed_laplacian(g, 0.1)
        L = lap.matrix.toarray()
        assert np.array_equal(L, L.T)
        assert np.abs(L.sum(axis=1)).max() <= 1e-12
        assert np.linalg.eigvalsh(L).min() >= -1e-9
        for (u, v), w in [(e, -1.0) for e in g.pos_edges] + [(e, -0.1) for e in g.neg_edges]:
            assert L[lap.index[u], lap.index[v]] == pytest.approx(w)

    def test_dump(self):
        buf = io.StringIO()
        signed_laplacian(path_graph(2), 1.0).dump(buf)
        assert buf.getvalue().splitlines() == ["0 0 1.0", "0 1 -1.0", "1 0 -1.0", "1 1 1.0"]


class TestQuadForm:
    def test_constant_vector(self):
        L = signed_laplacian(random_signed_graph(30, 0.2, seed=0), 0.1)
        assert quad_form(L, np.full(30, 3.7)) == 0.0

    def test_series_resistance(self):
        L = signed_laplacian(path_graph(4), 0.1)
        assert quad_form(L, np.array([1.0, 0, 0, -1.0])) == pytest.approx(3.0, rel=1e-10)

    def test_matches_dense_oracle(self, rng):
        L = signed_laplacian(random_signed_graph(50, 0.1, 0.3, seed=7), 0.1)
        for _ in range(10):
            b = rng.standard_normal(50)
            ref = dense_quad(L, b)
            assert abs(quad_form(L, b) - ref) <= 1e-6 * max(1.0, ref)

    def test_disconnected_rejected(self):
        g = SignedGraph.from_edges([(0, 1), (2, 3)])
        with pytest.raises(DisconnectedGraphError):
            quad_form(signed_laplacian(g, 0.1), np.array([1.0, 0, 0, -1]))

    def test_bad_vectors(self):
        L = signed_laplacian(path_graph(3), 1.0)
        with pytest.raises(ValueError):
            quad_form(L, np.ones(4))
        with pytest.raises(ValueError):
            quad_form(L, np.array([1.0, np.inf, 0]))

    def test_non_convergence_reports_residual(self):
        L = signed_laplacian(random_signed_graph(80, 0.05, seed=2), 0.1)
        b = np.random.default_rng(0).standard_normal(80)
        with pytest.raises(SolverError) as exc:
            quad_form(L, b, SolverConfig(rel_tolerance=1e-14, max_iterations=2))
        assert exc.value.residual > 0

    def test_quad_forms_columns(self, rng):
        L = signed_laplacian(random_signed_graph(25, 0.2, seed=4), 0.3)
        B = rng.standard_normal((25, 3))
        assert np.allclose(quad_forms(L, B), [quad_form(L, B[:, j]) for j in range(3)])


class TestPseudoinverse:
    def test_single_edge(self):
        P = dense_pseudoinverse(signed_laplacian(path_graph(2), 1.0))
        assert np.allclose(P, 0.25 * np.array([[1, -1], [-1, 1]]))

    def test_axioms(self):
        L = signed_laplacian(random_signed_graph(30, 0.2, 0.5, seed=3), 0.1)
        P = dense_pseudoinverse(L)
        assert np.allclose(P @ L.matrix.toarray() @ P, P, atol=1e-9)
        assert np.abs(P - P.T).max() <= 1e-12

    def test_cap(self):
        with pytest.raises(ValueError):
            dense_pseudoinverse(signed_laplacian(path_graph(5), 1.0), cap=4)


class TestResistance:
    @pytest.mark.parametrize("n", [2, 5, 17])
    def test_path(self, n):
        L = signed_laplacian(path_graph(n), 1.0)
        assert effective_resistance(L, 0, n - 1) == pytest.approx(n - 1, abs=1e-8)

    @pytest.mark.parametrize("n", [3, 6, 10])
    def test_complete(self, n):
        L = signed_laplacian(complete_graph(n), 1.0)
        P = dense_pseudoinverse(L)
        assert P[0, 0] + P[1, 1] - 2 * P[0, 1] == pytest.approx(2 / n, abs=1e-8)
        assert effective_resistance(L, 0, 1) == pytest.approx(2 / n, abs=1e-8)

    def test_symmetry_and_triangle(self, rng):
        g = random_signed_graph(30, 0.15, 0.4, seed=8)
        L = signed_laplacian(g, 0.1)
        for _ in range(100):
            u, v = (int(x) for x in rng.choice(30, 2, replace=False))
            assert effective_resistance(L, u, v) == pytest.approx(effective_resistance(L, v, u), abs=1e-9)
        for _ in range(30):
            u, v, w = (int(x) for x in rng.choice(30, 3, replace=False))
            assert (effective_resistance(L, u, w)
                    <= effective_resistance(L, u, v) + effective_resistance(L, v, w) + 1e-9)

    def test_unknown_node(self):
        with pytest.raises(KeyError):
            effective_resistance(signed_laplacian(path_graph(3), 1.0), 0, 99)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.floats(-50, 50))
def test_quad_form_properties(seed, eta1, eta2, c):
    g = random_signed_graph(20, 0.2, 0.5, seed=seed)
    b = np.random.default_rng(seed).standard_normal(20)
    lo, hi = sorted((eta1, eta2))
    q_lo = quad_form(signed_laplacian(g, lo), b)
    q_hi = quad_form(signed_laplacian(g, hi), b)
    assert q_lo >= -1e-9 and q_hi >= -1e-9
    assert q_lo >= q_hi - 1e-9
    L = signed_laplacian(g, lo)
    assert quad_form(L, b + c) == pytest.approx(q_lo, rel=1e-9, abs=1e-9)
