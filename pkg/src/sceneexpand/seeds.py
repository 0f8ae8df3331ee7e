"""Seed-graph extraction: sample small connected subgraphs of each component,
weighted by the mean PageRank of their nodes."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .graphs import SceneGraph, connected_components


class SeedExtractError(Exception):
    pass


class PageRankDivergedError(SeedExtractError):
    """Power iteration did not converge within the iteration budget."""


@dataclass(frozen=True)
class PageRankConfig:
    damping: float = 0.85
    tolerance: float = 1e-10
    max_iterations: int = 200

    def __post_init__(self):
        if not 0.0 < self.damping < 1.0:
            raise SeedExtractError("damping must be in (0, 1)")
        if self.tolerance <= 0:
            raise SeedExtractError("tolerance must be positive")


@dataclass(frozen=True)
class SeedExtractConfig:
    seeds_per_component: int = 1
    max_subgraph_nodes: int = 4
    connected_only: bool = True

    def __post_init__(self):
        if self.seeds_per_component < 1 or self.max_subgraph_nodes < 1:
            raise SeedExtractError("seeds per component and size cap must be >= 1")


def pagerank(component: SceneGraph, cfg: PageRankConfig = PageRankConfig()) -> dict[int, float]:
    """Power iteration on the directed edge structure, labels ignored; mass of
    dangling nodes is spread uniformly."""
    ids = [nid for nid, _ in component.nodes]
    if not ids:
        raise SeedExtractError("pagerank needs a non-empty graph")
    index = {nid: i for i, nid in enumerate(ids)}
    n = len(ids)
    out_links: list[list[int]] = [[] for _ in range(n)]
    for s, d, _ in component.edges:
        out_links[index[s]].append(index[d])
    x = np.full(n, 1.0 / n)
    for _ in range(cfg.max_iterations):
        nxt = np.zeros(n)
        dangling_mass = 0.0
        for i, targets in enumerate(out_links):
            if targets:
                share = x[i] / len(targets)
                for t in targets:
                    nxt[t] += share
            else:
                dangling_mass += x[i]
        nxt += dangling_mass / n
        nxt = (1.0 - cfg.damping) / n + cfg.damping * nxt
        if np.abs(nxt - x).sum() < cfg.tolerance:
            return {nid: float(nxt[index[nid]]) for nid in ids}
        x = nxt
    raise PageRankDivergedError(f"no convergence in {cfg.max_iterations} iterations")


def enumerate_subgraphs(
    component: SceneGraph, cfg: SeedExtractConfig = SeedExtractConfig()
) -> list[SceneGraph]:
    """All connected node-induced subgraphs with 1..cap nodes, in canonical
    order (by size, then sorted node-id tuple)."""
    ids = sorted(nid for nid, _ in component.nodes)
    adj: dict[int, set[int]] = {nid: set() for nid in ids}
    for s, d, _ in component.edges:
        adj[s].add(d)
        adj[d].add(s)
    out = []
    for size in range(1, min(cfg.max_subgraph_nodes, len(ids)) + 1):
        for subset in combinations(ids, size):
            if cfg.connected_only and not _is_connected(set(subset), adj):
                continue
            out.append(component.induced_subgraph(subset))
    return out


def _is_connected(members: set[int], adj: dict[int, set[int]]) -> bool:
    start = next(iter(members))
    seen = {start}
    frontier = [start]
    while frontier:
        u = frontier.pop()
        for v in adj[u] & members:
            if v not in seen:
                seen.add(v)
                frontier.append(v)
    return seen == members


def subgraph_distribution(
    component: SceneGraph,
    cfg: SeedExtractConfig = SeedExtractConfig(),
    pr_cfg: PageRankConfig = PageRankConfig(),
) -> tuple[list[SceneGraph], np.ndarray]:
    """Candidate subgraphs with their normalized mean-PageRank weights."""
    pr = pagerank(component, pr_cfg)
    candidates = enumerate_subgraphs(component, cfg)
    scores = np.asarray(
        [np.mean([pr[nid] for nid, _ in sub.nodes]) for sub in candidates]
    )
    return candidates, scores / scores.sum()


def extract_seeds(
    g: SceneGraph,
    cfg: SeedExtractConfig = SeedExtractConfig(),
    pr_cfg: PageRankConfig = PageRankConfig(),
    rng: np.random.Generator | None = None,
) -> list[SceneGraph]:
    """Per component, draw seeds without replacement from the mean-PageRank
    subgraph distribution; the union over components is returned."""
    rng = rng if rng is not None else np.random.default_rng(0)
    seeds: list[SceneGraph] = []
    for comp in connected_components(g):
        component = g.induced_subgraph(comp)
        candidates, weights = subgraph_distribution(component, cfg, pr_cfg)
        k = min(cfg.seeds_per_component, len(candidates))
        picks = rng.choice(len(candidates), size=k, replace=False, p=weights)
        seeds.extend(candidates[int(i)] for i in picks)
    return seeds
