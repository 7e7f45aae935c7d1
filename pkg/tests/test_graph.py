import numpy as np
import pytest
from hypothesis import given, strategies as st

from shaken.graph import (
    DoublingGraph,
    GraphError,
    InteractionGraph,
    Orientation,
    build_doubling,
    format_graph,
    format_orientation,
    orient,
    orientation_from_pairs,
    parse_graph,
    parse_orientation,
    validate_doubling,
)
from shaken.lattice import z2_doubling

from conftest import small_doublings


class TestInteractionGraph:
    def test_rejects_self_loop(self):
        with pytest.raises(GraphError, match="self-loop"):
            InteractionGraph(2, [(1, 1, 1.0)])

    def test_rejects_duplicate_edge(self):
        with pytest.raises(GraphError):
            InteractionGraph(2, [(0, 1, 1.0), (1, 0, 0.5)])

    def test_parallel_edges_opt_in(self):
        g = InteractionGraph(2, [(0, 1, 1.0), (1, 0, 0.5)], allow_parallel=True)
        assert g.n_edges == 2
        assert g.coupling_matrix[0, 1] == pytest.approx(1.5)

    def test_rejects_unknown_endpoint(self):
        with pytest.raises(GraphError):
            InteractionGraph(2, [(0, 2, 1.0)])

    @pytest.mark.parametrize("w", [np.nan, np.inf])
    def test_rejects_nonfinite(self, w):
        with pytest.raises(GraphError):
            InteractionGraph(2, [(0, 1, w)])
        with pytest.raises(GraphError):
            InteractionGraph(2, [], [0.0, w])

    def test_rejects_bad_frozen_value(self):
        with pytest.raises(GraphError):
            InteractionGraph(2, [], frozen={0: 0})

    def test_free_and_frozen_sites(self):
        g = InteractionGraph(4, [], frozen={2: -1})
        np.testing.assert_array_equal(g.free_sites, [0, 1, 3])
        np.testing.assert_array_equal(g.frozen_sites, [2])
        np.testing.assert_array_equal(g.frozen_values, [-1])

    def test_scaled(self, triangle):
        g = InteractionGraph(2, [(0, 1, 1.5)], [0.2, -0.4]).scaled(2.0)
        np.testing.assert_allclose(g.couplings, [3.0])
        np.testing.assert_allclose(g.fields, [0.4, -0.8])


class TestOrient:
    def test_single_edge_canonical(self):
        g = InteractionGraph(2, [(1, 0, 1.0)])
        assert orient(g).direction == ((0, 1),)

    def test_triangle_canonical(self, triangle):
        assert orient(triangle).direction == ((0, 1), (1, 2), (0, 2))

    @given(st.integers(0, 2**32 - 1))
    def test_seeded_is_deterministic(self, seed):
        g = InteractionGraph(5, [(i, j, 1.0) for i in range(5) for j in range(i + 1, 5)])
        a, b = orient(g, seed), orient(g, seed)
        assert a == b
        # each direction is one of the two endpoints' orders
        for (u, v, _), (t, h) in zip(g.edges, a.direction):
            assert {t, h} == {u, v}

    def test_seeded_flips_some_edges(self):
        g = InteractionGraph(20, [(i, i + 1, 1.0) for i in range(19)])
        flipped = [t > h for t, h in orient(g, seed=1).direction]
        assert 0 < sum(flipped) < len(flipped)

    def test_orientation_from_pairs_must_cover_edges(self, triangle):
        with pytest.raises(GraphError):
            orientation_from_pairs(triangle, [(0, 1), (1, 2)])


class TestBuildDoubling:
    def test_single_edge(self):
        g = InteractionGraph(2, [(0, 1, 1.0)])
        d = build_doubling(g, orient(g), 2.0)
        assert d.q == 2.0 and d.n == 2
        assert sorted(d.self_vertices) == [0, 1]
        # copy-1 vertex 0 -> copy-2 vertex 1 has doubled id n + 1
        assert d.interaction == ((0, 3, 1.0),)
        assert validate_doubling(d) == []

    def test_cyclic_triangle(self, triangle):
        o = Orientation(((0, 1), (1, 2), (2, 0)))
        d = build_doubling(triangle, o, 1.0)
        assert len(d.self_vertices) == 3 and len(d.interaction) == 3
        assert validate_doubling(d) == []

    def test_torus_is_hexagonal(self):
        d = z2_doubling(4, 1.0, 1.0)
        out_deg = np.bincount(d.tails, minlength=d.n)
        in_deg = np.bincount(d.heads, minlength=d.n)
        # each copy-1 vertex: one self edge plus two interaction edges
        np.testing.assert_array_equal(out_deg + 1, 3)
        np.testing.assert_array_equal(in_deg + 1, 3)

    def test_orientation_mismatch(self, triangle):
        with pytest.raises(GraphError):
            build_doubling(triangle, Orientation(((0, 1),)), 1.0)

    def test_nonfinite_q(self, triangle):
        with pytest.raises(GraphError):
            build_doubling(triangle, orient(triangle), np.inf)

    @given(small_doublings(max_free=5))
    def test_edge_counts_and_round_trip(self, d):
        assert len(d.interaction) == d.parent.n_edges
        assert len(d.self_vertices) == d.n
        collapsed = sorted((min(a, b - d.n), max(a, b - d.n)) for a, b, _ in d.interaction)
        parent = sorted((min(u, v), max(u, v)) for u, v, _ in d.parent.edges)
        assert collapsed == parent
        assert validate_doubling(d) == []

    @given(small_doublings())
    def test_in_and_out_matrices(self, d):
        out = d.out_matrix.toarray()
        np.testing.assert_array_equal(d.in_matrix.toarray(), out.T)
        dense = np.zeros((d.n, d.n))
        for x, y, w in zip(d.tails, d.heads, d.weights):
            dense[x, y] += w
        np.testing.assert_array_equal(out, dense)


class TestValidateDoubling:
    def _pair(self):
        return InteractionGraph(2, [(0, 1, 1.0)])

    def test_both_directions_present(self):
        g = self._pair()
        d = DoublingGraph(g, 1.0, ((0, 3, 1.0), (1, 2, 1.0)))
        problems = validate_doubling(d)
        assert len(problems) == 1 and "{0, 1}" in problems[0]

    def test_missing_self_edge(self):
        g = self._pair()
        d = DoublingGraph(g, 1.0, ((0, 3, 1.0),), self_vertices=(0,))
        problems = validate_doubling(d)
        assert problems == ["vertex 1 has 0 self edges"]

    def test_not_bipartite(self):
        g = self._pair()
        d = DoublingGraph(g, 1.0, ((0, 1, 1.0),))
        assert any("bipartite" in p for p in validate_doubling(d))

    def test_interaction_on_self_pair(self):
        g = self._pair()
        d = DoublingGraph(g, 1.0, ((0, 3, 1.0), (0, 2, 1.0)))
        assert any("duplicates its self edge" in p for p in validate_doubling(d))


class TestTextFormat:
    TEXT = """
    # two spins and a frozen one
    v a 0.5
    v b -0.25
    v c 0
    e a b 1.5
    e b c -1e-1
    b c -1
    """

    def test_parse(self):
        g, ids = parse_graph(self.TEXT)
        assert ids == {"a": 0, "b": 1, "c": 2}
        np.testing.assert_allclose(g.fields, [0.5, -0.25, 0.0])
        assert g.edges == ((0, 1, 1.5), (1, 2, -0.1))
        assert g.frozen == {2: -1}

    def test_round_trip(self):
        g, _ = parse_graph(self.TEXT)
        g2, _ = parse_graph(format_graph(g))
        assert g2.edges == g.edges and g2.frozen == g.frozen
        np.testing.assert_array_equal(g2.fields, g.fields)

    @pytest.mark.parametrize("bad", [
        "v a 0\ne a b 1",          # undeclared vertex
        "v a 0\nv a 1",            # declared twice
        "v a 0\nv b 0\ne a b x",   # bad number
        "v a 0\nv b 0\ne a b 1\ne b a 2",  # duplicate edge
        "x a 0",                   # unknown record
        "v a 0\nb a 2",            # frozen value not +-1
        "# only a comment",
    ])
    def test_parse_errors(self, bad):
        with pytest.raises(GraphError):
            parse_graph(bad)

    def test_orientation_file(self):
        g, ids = parse_graph(self.TEXT)
        o = parse_orientation("o b a\no b c\n", g, ids)
        assert o.direction == ((1, 0), (1, 2))
        o2 = parse_orientation(format_orientation(o), g)
        assert o2 == o

    def test_orientation_file_errors(self):
        g, ids = parse_graph(self.TEXT)
        with pytest.raises(GraphError):
            parse_orientation("o a z\n", g, ids)
        with pytest.raises(GraphError):
            parse_orientation("o a b\n", g, ids)  # missing edge b-c
