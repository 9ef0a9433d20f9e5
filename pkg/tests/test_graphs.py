from math import comb

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wembed.errors import DisconnectedGraphError, EdgeListParseError
from wembed.graphs import (
    Graph,
    apsp,
    bfs_fragment,
    block_membership,
    gen_barabasi_albert,
    gen_random_tree,
    gen_sbm,
    gen_watts_strogatz,
    generate,
    load_edge_list,
    read_metric_csv,
    write_edge_list,
    write_metric_csv,
)


def to_nx(g):
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges)
    return h


def assert_simple(g):
    assert all(0 <= u < v < g.n for u, v in g.edges)
    assert len(set(g.edges)) == len(g.edges)


class TestGraph:
    def test_canonicalises(self):
        g = Graph(3, [(1, 0), (0, 1), (2, 2), (2, 1)])
        assert g.edges == [(0, 1), (1, 2)]

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            Graph(2, [(0, 2)])


class TestBarabasiAlbert:
    def test_128_vertices_connected(self):
        g = gen_barabasi_albert(128, 2, seed=0)
        assert g.n == 128 and g.is_connected()
        assert_simple(g)

    @given(st.integers(3, 60), st.integers(1, 4), st.integers(0, 1000))
    def test_edge_count(self, n, attach, seed):
        if attach >= n:
            return
        g = gen_barabasi_albert(n, attach, seed)
        assert g.n_edges == comb(attach + 1, 2) + (n - attach - 1) * attach

    def test_deterministic(self):
        assert gen_barabasi_albert(64, 2, 5).edges == gen_barabasi_albert(64, 2, 5).edges

    def test_heavy_tail(self):
        deg = gen_barabasi_albert(500, 2, seed=1).degrees()
        assert deg.max() > 5 * np.median(deg)

    def test_invalid(self):
        with pytest.raises(ValueError):
            gen_barabasi_albert(3, 3)


class TestWattsStrogatz:
    def test_ring_lattice(self):
        g = gen_watts_strogatz(20, 4, 0.0)
        assert np.all(g.degrees() == 4)

    @given(st.floats(0, 1), st.integers(0, 100))
    def test_edge_count_preserved(self, beta, seed):
        assert gen_watts_strogatz(40, 4, beta, seed, ensure_connected=False).n_edges == 40 * 4 // 2

    def test_full_rewiring_mostly_connected(self):
        ok = sum(gen_watts_strogatz(128, 4, 1.0, s, ensure_connected=False).is_connected() for s in range(100))
        assert ok >= 95

    def test_invalid(self):
        with pytest.raises(ValueError):
            gen_watts_strogatz(10, 3, 0.1)
        with pytest.raises(ValueError):
            gen_watts_strogatz(10, 4, 1.5)


class TestSBM:
    def test_disjoint_cliques_rejected(self):
        with pytest.raises(DisconnectedGraphError):
            gen_sbm(10, 2, 1.0, 0.0)

    def test_disjoint_cliques_without_retry(self):
        g = gen_sbm(10, 2, 1.0, 0.0, ensure_connected=False)
        assert g.n_edges == 2 * comb(5, 2) and not g.is_connected()

    def test_complete(self):
        assert gen_sbm(12, 3, 1.0, 1.0).n_edges == comb(12, 2)

    def test_intra_fraction(self):
        member = block_membership(64, 4)
        intra = inter = 0
        for s in range(20):
            for u, v in gen_sbm(64, 4, 0.3, 0.05, seed=s).edges:
                if member[u] == member[v]:
                    intra += 1
                else:
                    inter += 1
        n_intra_pairs = 4 * comb(16, 2)
        n_inter_pairs = comb(64, 2) - n_intra_pairs
        assert intra / n_intra_pairs > inter / n_inter_pairs

    def test_invalid(self):
        with pytest.raises(ValueError):
            gen_sbm(10, 2, 0.1, 0.5)
        with pytest.raises(ValueError):
            gen_sbm(10, 2, 1.5, 0.5)


class TestRandomTree:
    @given(st.integers(1, 200), st.integers(0, 10_000))
    def test_is_tree(self, n, seed):
        g = gen_random_tree(n, seed)
        assert g.n_edges == n - 1
        assert nx.is_tree(to_nx(g)) if n > 0 else True

    def test_branching(self):
        for seed in range(10):
            g = gen_random_tree(128, seed)
            children = np.bincount([u for u, _ in g.edges], minlength=128)
            internal = np.flatnonzero(children)
            assert np.all((children[internal[:-1]] >= 2) & (children[internal[:-1]] <= 4))
            assert 1 <= children[internal[-1]] <= 4

    def test_single_node(self):
        assert gen_random_tree(1).edges == []

    def test_depth_logarithmic(self):
        for seed in range(20):
            assert apsp(gen_random_tree(128, seed))[0].max() <= 8


class TestAPSP:
    def test_path(self):
        assert apsp(Graph(3, [(0, 1), (1, 2)]))[0, 2] == 2

    def test_complete(self):
        d = apsp(Graph(5, [(i, j) for i in range(5) for j in range(i + 1, 5)]))
        np.testing.assert_array_equal(d, 1 - np.eye(5))

    @pytest.mark.parametrize("model", ["ba", "ws", "sbm", "tree"])
    def test_matches_networkx(self, model):
        g = generate(model, 48, seed=3)
        d = apsp(g)
        ref = dict(nx.all_pairs_shortest_path_length(to_nx(g)))
        expected = np.array([[ref[i][j] for j in range(g.n)] for i in range(g.n)])
        np.testing.assert_array_equal(d, expected)
        assert np.all(d[:, :, None] <= d[:, None, :] + d.T[None, :, :])
        np.testing.assert_array_equal(d, d.T)

    def test_disconnected_names_pair(self):
        with pytest.raises(DisconnectedGraphError) as exc:
            apsp(Graph(3, [(0, 1)]))
        assert exc.value.pair == (0, 2)


class TestFragment:
    def test_whole_graph_isomorphic(self):
        g = gen_barabasi_albert(30, 2, seed=2)
        f = bfs_fragment(g.edges, 30, seed=0)
        assert nx.is_isomorphic(to_nx(g), to_nx(f))

    def test_size_and_induced(self):
        g = gen_watts_strogatz(100, 4, 0.2, seed=1)
        f = bfs_fragment(g.edges, 40, seed=4)
        assert f.n == 40 and f.is_connected()
        assert f.n_edges >= f.n - 1

    def test_induced_against_networkx(self):
        g = gen_sbm(80, 4, 0.3, 0.05, seed=0)
        # relabelled vertex i is the i-th BFS vertex; rebuild the mapping from networkx BFS
        f = bfs_fragment(g.edges, 25, seed=9)
        rng = np.random.default_rng(9)
        start = int(rng.integers(80))
        h = to_nx(g)
        order = [start]
        for u in order:
            order.extend(w for w in sorted(h[u]) if w not in order)
        keep = order[:25]
        expected = to_nx(g).subgraph(keep)
        relabel = {v: i for i, v in enumerate(keep)}
        assert sorted(tuple(sorted((relabel[u], relabel[v]))) for u, v in expected.edges) == f.edges

    def test_too_large(self):
        with pytest.raises(ValueError):
            bfs_fragment([(0, 1), (2, 3)], 3)


class TestEdgeList:
    def test_parse(self, tmp_path):
        p = tmp_path / "g.txt"
        p.write_text("# comment\n0 1\n1 2\n")
        assert load_edge_list(p) == [(0, 1), (1, 2)]

    def test_self_loops_and_duplicates(self, tmp_path):
        p = tmp_path / "g.txt"
        p.write_text("0 0\n0 1\n1 0\n")
        assert load_edge_list(p) == [(0, 1)]

    def test_bad_token_line_number(self, tmp_path):
        p = tmp_path / "g.txt"
        p.write_text("0 1\n1 x\n")
        with pytest.raises(EdgeListParseError) as exc:
            load_edge_list(p)
        assert exc.value.lineno == 2

    def test_round_trip(self, tmp_path):
        g = gen_random_tree(20, seed=1)
        write_edge_list(g, tmp_path / "t.txt", "tree")
        assert load_edge_list(tmp_path / "t.txt") == g.edges

    def test_metric_csv(self, tmp_path):
        d = apsp(gen_random_tree(10, seed=0))
        write_metric_csv(d, tmp_path / "d.csv")
        np.testing.assert_array_equal(read_metric_csv(tmp_path / "d.csv"), d)


def test_generate_unknown():
    with pytest.raises(ValueError):
        generate("er", 10)
