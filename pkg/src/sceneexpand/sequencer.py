"""Graph <-> sequence conversion via cluster-aware BFS.

Each maximal weakly-connected component is BFS-ordered from a random start
node, and component blocks are concatenated in random order, so nodes that
belong together in the scene stay adjacent in the sequence. Every step carries
the node's label plus directed edge pairs against up to k previous nodes,
nearest predecessor first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import SceneGraph, connected_components


@dataclass(frozen=True)
class EdgePair:
    """Relations between step i and an earlier step j, one per direction.

    `forward` is the relation index for i->j, `backward` for j->i; either may
    be the NO_EDGE index of the governing vocabulary.
    """

    forward: int
    backward: int


@dataclass(frozen=True)
class SequenceStep:
    node: int  # object-label index
    edges: tuple[EdgePair, ...]  # predecessors j = i-1, i-2, ..., max(0, i-k)


@dataclass(frozen=True)
class GraphSequence:
    steps: tuple[SequenceStep, ...]
    k: int
    permutation: tuple[int, ...]  # node ids in sequence order


def cluster_aware_bfs(
    g: SceneGraph, k: int, rng: np.random.Generator, no_edge: int
) -> GraphSequence:
    """Flatten a graph into a sequence, keeping components contiguous.

    Within a component the order is a valid BFS from a uniformly chosen start
    node with randomized neighbor visit order. Edges further than the k most
    recent predecessors are dropped.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    adj: dict[int, list[int]] = {nid: [] for nid, _ in g.nodes}
    for s, d, _ in g.edges:
        adj[s].append(d)
        adj[d].append(s)
    comps = connected_components(g)
    order: list[int] = []
    comp_indices = np.arange(len(comps))
    rng.shuffle(comp_indices)
    for ci in comp_indices:
        members = sorted(comps[ci])
        start = members[int(rng.integers(len(members)))]
        visited = {start}
        queue = [start]
        while queue:
            u = queue.pop(0)
            order.append(u)
            neighbors = sorted(set(adj[u]) - visited)
            rng.shuffle(neighbors)
            for v in neighbors:
                visited.add(v)
                queue.append(v)
    return _sequence_from_order(g, order, k, no_edge)


def _sequence_from_order(
    g: SceneGraph, order: list[int], k: int, no_edge: int
) -> GraphSequence:
    label = dict(g.nodes)
    edge_label = {(s, d): l for s, d, l in g.edges}
    pos = {nid: i for i, nid in enumerate(order)}
    steps = []
    for i, nid in enumerate(order):
        pairs = []
        for j in range(i - 1, max(i - k, 0) - 1, -1):
            prev = order[j]
            pairs.append(
                EdgePair(
                    forward=edge_label.get((nid, prev), no_edge),
                    backward=edge_label.get((prev, nid), no_edge),
                )
            )
        steps.append(SequenceStep(node=label[nid], edges=tuple(pairs)))
    return GraphSequence(steps=tuple(steps), k=k, permutation=tuple(order))


def sequence_to_graph(s: GraphSequence, no_edge: int) -> SceneGraph:
    """Rebuild a graph from a sequence; node ids are sequence positions."""
    nodes = tuple((i, step.node) for i, step in enumerate(s.steps))
    edges = []
    for i, step in enumerate(s.steps):
        for offset, pair in enumerate(step.edges, start=1):
            j = i - offset
            if pair.forward != no_edge:
                edges.append((i, j, pair.forward))
            if pair.backward != no_edge:
                edges.append((j, i, pair.backward))
    return SceneGraph(nodes=nodes, edges=tuple(edges))


def truncate_edges(s: GraphSequence, k: int) -> GraphSequence:
    """Keep only the k nearest predecessors' edge pairs at every step."""
    if k < 1:
        raise ValueError("k must be >= 1")
    steps = tuple(
        SequenceStep(node=step.node, edges=step.edges[:k]) for step in s.steps
    )
    return GraphSequence(steps=steps, k=min(s.k, k), permutation=s.permutation)
