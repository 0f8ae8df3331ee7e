"""Shared fixtures and independent oracles used across the test suite."""

from itertools import permutations

import numpy as np
import pytest

from sceneexpand.graphs import SceneGraph, Vocabulary


@pytest.fixture
def vocab():
    return Vocabulary(
        object_labels=("man", "horse", "tree", "dog", "grass"),
        relation_labels=("riding", "near", "eating"),
    )


def random_graph(
    rng: np.random.Generator,
    max_nodes: int = 8,
    num_labels: int = 5,
    num_relations: int = 3,
    min_nodes: int = 1,
    edge_prob: float = 0.3,
) -> SceneGraph:
    n = int(rng.integers(min_nodes, max_nodes + 1))
    # non-contiguous ids exercise the id/position distinction
    ids = sorted(rng.choice(3 * max_nodes, size=n, replace=False).tolist())
    nodes = tuple((int(i), int(rng.integers(num_labels))) for i in ids)
    edges = []
    for s in ids:
        for d in ids:
            if s != d and rng.random() < edge_prob:
                edges.append((int(s), int(d), int(rng.integers(num_relations))))
    return SceneGraph(nodes=nodes, edges=tuple(edges))


def brute_force_embeds(small: SceneGraph, big: SceneGraph) -> bool:
    """Exhaustive injective-mapping search: label-preserving map carrying every
    directed labeled edge of `small` onto an identical edge of `big`."""
    small_ids = [nid for nid, _ in small.nodes]
    small_label = dict(small.nodes)
    big_ids = [nid for nid, _ in big.nodes]
    big_label = dict(big.nodes)
    big_edges = {(s, d): l for s, d, l in big.edges}
    if len(small_ids) > len(big_ids):
        return False
    for chosen in permutations(big_ids, len(small_ids)):
        mapping = dict(zip(small_ids, chosen))
        if any(small_label[n] != big_label[mapping[n]] for n in small_ids):
            continue
        if all(big_edges.get((mapping[s], mapping[d])) == l for s, d, l in small.edges):
            return True
    return False


def union_find_components(g: SceneGraph) -> list[set[int]]:
    parent = {nid: nid for nid, _ in g.nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for s, d, _ in g.edges:
        parent[find(s)] = find(d)
    groups: dict[int, set[int]] = {}
    for nid in parent:
        groups.setdefault(find(nid), set()).add(nid)
    return sorted(groups.values(), key=min)
