import numpy as np
import pytest

from sceneexpand.graphs import SceneGraph, connected_components
from sceneexpand.seeds import (
    PageRankConfig,
    PageRankDivergedError,
    SeedExtractConfig,
    SeedExtractError,
    enumerate_subgraphs,
    extract_seeds,
    pagerank,
    subgraph_distribution,
)

from conftest import random_graph


def edge_pair_graph():
    # a -> b, b has no outgoing links
    return SceneGraph(nodes=((0, 0), (1, 1)), edges=((0, 1, 0),))


def triangle():
    return SceneGraph(
        nodes=((0, 0), (1, 1), (2, 2)),
        edges=((0, 1, 0), (1, 2, 0), (2, 0, 0)),
    )


def path4():
    return SceneGraph(
        nodes=tuple((i, i) for i in range(4)),
        edges=((0, 1, 0), (1, 2, 0), (2, 3, 0)),
    )


class TestPagerank:
    def test_single_node_gets_all_mass(self):
        pr = pagerank(SceneGraph(nodes=((5, 0),), edges=()))
        assert pr == {5: pytest.approx(1.0)}

    def test_bidirectional_pair_splits_evenly(self):
        g = SceneGraph(nodes=((0, 0), (1, 1)), edges=((0, 1, 0), (1, 0, 0)))
        pr = pagerank(g)
        assert pr[0] == pytest.approx(0.5, abs=1e-9)
        assert pr[1] == pytest.approx(0.5, abs=1e-9)

    def test_single_directed_edge_hand_values(self):
        pr = pagerank(edge_pair_graph())
        assert pr[0] == pytest.approx(0.35088, abs=1e-5)
        assert pr[1] == pytest.approx(0.64912, abs=1e-5)

    def test_scores_sum_to_one_on_random_graphs(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            g = random_graph(rng, max_nodes=10, min_nodes=1)
            pr = pagerank(g)
            assert sum(pr.values()) == pytest.approx(1.0, abs=1e-8)
            assert all(v > 0 for v in pr.values())

    def test_iteration_budget_enforced(self):
        with pytest.raises(PageRankDivergedError):
            pagerank(edge_pair_graph(), PageRankConfig(max_iterations=1))

    def test_bad_config_rejected(self):
        with pytest.raises(SeedExtractError):
            PageRankConfig(damping=1.0)
        with pytest.raises(SeedExtractError):
            PageRankConfig(tolerance=0.0)


class TestEnumerateSubgraphs:
    def test_singleton_graph(self):
        g = SceneGraph(nodes=((3, 1),), edges=())
        subs = enumerate_subgraphs(g)
        assert len(subs) == 1
        assert subs[0].nodes == ((3, 1),)

    def test_triangle_yields_seven(self):
        subs = enumerate_subgraphs(triangle(), SeedExtractConfig(max_subgraph_nodes=3))
        assert len(subs) == 7
        sizes = [s.num_nodes for s in subs]
        assert sizes == [1, 1, 1, 2, 2, 2, 3]

    def test_path_of_four_capped_at_two_yields_seven(self):
        subs = enumerate_subgraphs(path4(), SeedExtractConfig(max_subgraph_nodes=2))
        # four singletons plus the three adjacent pairs; (0,2), (0,3), (1,3) are
        # not connected
        assert len(subs) == 7
        pairs = [tuple(n for n, _ in s.nodes) for s in subs if s.num_nodes == 2]
        assert pairs == [(0, 1), (1, 2), (2, 3)]

    def test_disconnected_subsets_kept_when_allowed(self):
        cfg = SeedExtractConfig(max_subgraph_nodes=2, connected_only=False)
        assert len(enumerate_subgraphs(path4(), cfg)) == 4 + 6

    def test_canonical_order_and_induced_edges(self):
        rng = np.random.default_rng(7)
        g = random_graph(rng, max_nodes=6, min_nodes=4, edge_prob=0.5)
        subs = enumerate_subgraphs(g, SeedExtractConfig(max_subgraph_nodes=3))
        keys = [(s.num_nodes, tuple(n for n, _ in s.nodes)) for s in subs]
        assert keys == sorted(keys)
        labels = dict(g.nodes)
        all_edges = set(g.edges)
        for s in subs:
            members = {n for n, _ in s.nodes}
            assert all(labels[n] == l for n, l in s.nodes)
            expected = {(a, b, l) for a, b, l in all_edges if a in members and b in members}
            assert set(s.edges) == expected


class TestSubgraphDistribution:
    def test_weights_normalize(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            g = random_graph(rng, max_nodes=7, min_nodes=2, edge_prob=0.5)
            comp = g.induced_subgraph(max(connected_components(g), key=len))
            subs, w = subgraph_distribution(comp)
            assert len(subs) == len(w)
            assert w.sum() == pytest.approx(1.0, abs=1e-9)
            assert np.all(w > 0)

    def test_higher_rank_singleton_weighs_more(self):
        subs, w = subgraph_distribution(edge_pair_graph())
        by_nodes = {tuple(n for n, _ in s.nodes): float(x) for s, x in zip(subs, w)}
        assert by_nodes[(1,)] > by_nodes[(0,)]


class TestExtractSeeds:
    def test_single_node_graph_returns_itself(self):
        g = SceneGraph(nodes=((4, 2),), edges=())
        (seed,) = extract_seeds(g)
        assert seed.nodes == ((4, 2),)

    def test_one_seed_per_component(self):
        g = SceneGraph(
            nodes=((0, 0), (1, 1), (10, 0), (11, 1)),
            edges=((0, 1, 0), (10, 11, 0)),
        )
        seeds = extract_seeds(g, rng=np.random.default_rng(0))
        assert len(seeds) == 2
        sides = [{n for n, _ in s.nodes} <= {0, 1} for s in seeds]
        assert sorted(sides) == [False, True]

    def test_seeds_are_connected_induced_subgraphs(self):
        rng = np.random.default_rng(13)
        for _ in range(15):
            g = random_graph(rng, max_nodes=9, min_nodes=2, edge_prob=0.25)
            seeds = extract_seeds(g, SeedExtractConfig(seeds_per_component=2), rng=rng)
            labels = dict(g.nodes)
            for s in seeds:
                assert len(connected_components(s)) == 1
                members = {n for n, _ in s.nodes}
                assert all(labels[n] == l for n, l in s.nodes)
                expected = {
                    (a, b, l) for a, b, l in g.edges if a in members and b in members
                }
                assert set(s.edges) == expected

    def test_request_capped_by_candidate_count(self):
        g = SceneGraph(nodes=((0, 0),), edges=())
        seeds = extract_seeds(g, SeedExtractConfig(seeds_per_component=5))
        assert len(seeds) == 1

    def test_deterministic_for_fixed_rng(self):
        g = random_graph(np.random.default_rng(17), max_nodes=8, min_nodes=4)
        a = extract_seeds(g, rng=np.random.default_rng(23))
        b = extract_seeds(g, rng=np.random.default_rng(23))
        assert a == b

    def test_bad_config_rejected(self):
        with pytest.raises(SeedExtractError):
            SeedExtractConfig(seeds_per_component=0)
        with pytest.raises(SeedExtractError):
            SeedExtractConfig(max_subgraph_nodes=0)
