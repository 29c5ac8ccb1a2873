import itertools

import numpy as np
import pytest

from reachmax.chain import ChainSpec, validate_chain
from reachmax.errors import CombinatorialLimit, InvalidGraph, SingularMatrix
from reachmax.objective import eval_reach
from reachmax.oracle import (NULL, SIGMA, dense_solve_f, exhaustive_opt, gen_vertex_cover_instance,
                             monte_carlo_f, random_chain, random_graph, vc_threshold)

PATH = [(1, 2), (2, 3)]
TRIANGLE = [(1, 2), (2, 3), (1, 3)]


class TestDenseSolve:
    def test_known_values(self, e1, e2):
        np.testing.assert_allclose(dense_solve_f(e1, [1]), 1 / 3, rtol=1e-15)
        assert dense_solve_f(e2, [2]) == 1.0
        assert dense_solve_f(e1, []) == 0.0

    def test_singular(self):
        spec = ChainSpec.from_rows(1, (NULL, SIGMA), SIGMA, [1], {1: {1: 1.0}}, {1: {1: 1.0}})
        with pytest.raises(SingularMatrix):
            dense_solve_f(spec, [])


class TestMonteCarlo:
    def test_unreachable_target(self, e1):
        est = monte_carlo_f(e1, [], n_walks=2000)
        assert est.estimate == 0.0 and est.stderr == 0.0

    def test_deterministic_chain(self, e2):
        assert monte_carlo_f(e2, [2], n_walks=1000).estimate == 1.0

    def test_e1_within_three_sigma(self, e1):
        est = monte_carlo_f(e1, [1], n_walks=100_000, horizon=1000, seed=3)
        assert abs(est.estimate - 1 / 3) <= 3 * est.stderr
        assert est.truncated == 0 and est.seed == 3

    def test_workers_do_not_change_result(self, rng):
        spec = random_chain(12, rng)
        a = monte_carlo_f(spec, [1, 2], n_walks=5000, seed=11, workers=1)
        b = monte_carlo_f(spec, [1, 2], n_walks=5000, seed=11, workers=4)
        assert a == b

    def test_short_horizon_biases_low(self, e1):
        est = monte_carlo_f(e1, [1], n_walks=20_000, horizon=1, seed=1)
        assert est.truncated > 0
        assert est.estimate < 1 / 3

    def test_default_horizon(self, rng):
        spec = random_chain(7, rng)
        assert monte_carlo_f(spec, [1], n_walks=10).horizon == 700


class TestExhaustive:
    def test_e2_tie(self, e2):
        assert exhaustive_opt(e2, 1) == ((1,), 1.0)

    def test_path_cover(self):
        s, f = exhaustive_opt(gen_vertex_cover_instance(PATH, 0.1).chain, 1)
        assert s == (2,)
        np.testing.assert_allclose(f, 1 - (2 / 3) * 0.1, rtol=1e-14)

    def test_order_independent(self, rng):
        spec = random_chain(8, rng)
        assert exhaustive_opt(spec, 3) == exhaustive_opt(spec, 3, reverse=True)

    def test_limit(self, rng):
        spec = random_chain(30, rng)
        with pytest.raises(CombinatorialLimit):
            exhaustive_opt(spec, 15)


class TestThreshold:
    def test_values(self):
        np.testing.assert_allclose(vc_threshold(3, 1, 0.1), 0.9333333333333333, rtol=1e-15)
        assert vc_threshold(5, 5, 0.3) == 1.0
        assert vc_threshold(5, 0, 0.3) == 0.7
        with pytest.raises(ValueError):
            vc_threshold(3, 4, 0.1)


class TestVertexCoverInstance:
    def test_construction(self):
        inst = gen_vertex_cover_instance(PATH, 0.1)
        spec = inst.chain
        assert validate_chain(spec).ok and validate_chain(inst.bipartite).ok
        assert spec.row("q", 2) == {SIGMA: 1.0}
        assert spec.row("q_bar", 2) == {1: 0.45, 3: 0.45, NULL: 0.1}
        np.testing.assert_array_equal(spec.pi, np.full(3, 1 / 3))

    def test_path_cover_value(self):
        inst = gen_vertex_cover_instance(PATH, 0.1)
        np.testing.assert_allclose(eval_reach(inst.chain, [2]).f, 0.9333333333333333, atol=1e-15)

    def test_triangle_has_no_single_cover(self):
        inst = gen_vertex_cover_instance(TRIANGLE, 0.1)
        for z in (1, 2, 3):
            assert eval_reach(inst.chain, [z]).f < vc_threshold(3, 1, 0.1) - 1e-12

    def test_full_selection(self, rng):
        inst = gen_vertex_cover_instance(random_graph(8, 0.4, rng), 0.2)
        assert eval_reach(inst.chain, range(1, 9)).f == 1.0

    def test_cover_iff_threshold(self, rng):
        edges = random_graph(7, 0.35, rng)
        inst = gen_vertex_cover_instance(edges, 0.1)
        for size in range(4):
            for u in itertools.combinations(inst.nodes, size):
                f = dense_solve_f(inst.chain, inst.selection(u))
                if inst.is_cover(u):
                    assert abs(f - inst.threshold(size)) <= 1e-10
                else:
                    assert f < inst.threshold(size) - 1e-12

    def test_bipartite_cover_separation(self, rng):
        inst = gen_vertex_cover_instance(random_graph(6, 0.4, rng), 0.1)
        for size in (1, 2, 3):
            values = {u: eval_reach(inst.bipartite, inst.selection(u)).f
                      for u in itertools.combinations(inst.nodes, size)}
            covers = [v for u, v in values.items() if inst.is_cover(u)]
            others = [v for u, v in values.items() if not inst.is_cover(u)]
            if covers and others:
                assert min(covers) > max(others)
                np.testing.assert_allclose(covers, covers[0], atol=1e-12)

    def test_rejects_bad_graphs(self):
        with pytest.raises(InvalidGraph):
            gen_vertex_cover_instance([(1, 1)], 0.1)
        with pytest.raises(InvalidGraph):
            gen_vertex_cover_instance(PATH, 1.5)
        with pytest.raises(InvalidGraph):
            gen_vertex_cover_instance(PATH, 0.1, nodes=[4])

    def test_string_labels(self):
        inst = gen_vertex_cover_instance([("a", "b"), ("b", "c")], 0.1)
        assert inst.nodes == ("a", "b", "c")
        assert inst.selection(["b"]) == (2,)


class TestRandomGenerators:
    def test_graph_has_no_isolated_vertices(self, rng):
        for _ in range(20):
            edges = random_graph(10, 0.05, rng)
            assert {u for e in edges for u in e} == set(range(1, 11))

    def test_chain_reproducible(self):
        a = random_chain(10, np.random.default_rng(4))
        b = random_chain(10, np.random.default_rng(4))
        assert (a.q != b.q).nnz == 0 and (a.q_bar != b.q_bar).nnz == 0
