"""Evaluation battery for generated scene graphs.

Distribution distances (MMD over structural and label descriptor histograms,
plus a neighborhood-pair graph kernel with the node-only term removed),
co-occurrence agreement scores, edge precision, novelty and diversity, and the
labeled directed subgraph-isomorphism engine they all rely on.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, asdict
from typing import Sequence

import numpy as np

from .graphs import Corpus, SceneGraph, Vocabulary


class MetricError(Exception):
    pass


@dataclass(frozen=True)
class MetricConfig:
    sigma: float = 1.0  # Gaussian kernel bandwidth
    degree_max_bin: int = 20  # overflow bin above
    clustering_bins: int = 10  # uniform on [0, 1]
    count_max_bin: int = 50
    nspdk_radii: tuple[int, ...] = (0, 1)
    nspdk_distances: tuple[int, ...] = (1, 2, 3)
    top_k: int = 20
    splits: int = 1

    def __post_init__(self):
        if self.sigma <= 0:
            raise MetricError("sigma must be positive")
        if self.top_k < 1 or self.splits < 1:
            raise MetricError("top_k and splits must be >= 1")


@dataclass(frozen=True)
class DescriptorHistogram:
    kind: str
    frequencies: tuple[float, ...]
    empty: bool = False  # zero histogram from an empty graph, flagged


DESCRIPTOR_KINDS = ("degree", "clustering", "node_label", "edge_label", "node_count", "edge_count")


def descriptor_histogram(
    g: SceneGraph, kind: str, vocab: Vocabulary, cfg: MetricConfig = MetricConfig()
) -> DescriptorHistogram:
    if kind == "degree":
        if g.num_nodes == 0:
            return DescriptorHistogram(kind, (0.0,) * (cfg.degree_max_bin + 2), empty=True)
        deg = {nid: 0 for nid, _ in g.nodes}
        for s, d, _ in g.edges:
            deg[s] += 1
            deg[d] += 1
        hist = np.zeros(cfg.degree_max_bin + 2)
        for v in deg.values():
            hist[min(v, cfg.degree_max_bin + 1)] += 1
        return DescriptorHistogram(kind, tuple(hist / hist.sum()))
    if kind == "clustering":
        if g.num_nodes == 0:
            return DescriptorHistogram(kind, (0.0,) * cfg.clustering_bins, empty=True)
        coeffs = _clustering_coefficients(g)
        hist = np.zeros(cfg.clustering_bins)
        for c in coeffs:
            hist[min(int(c * cfg.clustering_bins), cfg.clustering_bins - 1)] += 1
        return DescriptorHistogram(kind, tuple(hist / hist.sum()))
    if kind == "node_label":
        hist = np.zeros(vocab.num_objects)
        for _, lab in g.nodes:
            hist[lab] += 1
        empty = g.num_nodes == 0
        return DescriptorHistogram(kind, tuple(hist / hist.sum()) if not empty else tuple(hist), empty=empty)
    if kind == "edge_label":
        hist = np.zeros(vocab.num_relations)
        for _, _, lab in g.edges:
            hist[lab] += 1
        empty = g.num_edges == 0
        return DescriptorHistogram(kind, tuple(hist / hist.sum()) if not empty else tuple(hist), empty=empty)
    if kind == "node_count":
        hist = np.zeros(cfg.count_max_bin + 1)
        hist[min(g.num_nodes, cfg.count_max_bin)] = 1.0
        return DescriptorHistogram(kind, tuple(hist))
    if kind == "edge_count":
        hist = np.zeros(cfg.count_max_bin + 1)
        hist[min(g.num_edges, cfg.count_max_bin)] = 1.0
        return DescriptorHistogram(kind, tuple(hist))
    raise MetricError(f"unknown descriptor kind: {kind}")


def _clustering_coefficients(g: SceneGraph) -> list[float]:
    """Local clustering on the undirected, label-collapsed simplification."""
    adj: dict[int, set[int]] = {nid: set() for nid, _ in g.nodes}
    for s, d, _ in g.edges:
        adj[s].add(d)
        adj[d].add(s)
    out = []
    for nid, neighbors in adj.items():
        k = len(neighbors)
        if k < 2:
            out.append(0.0)
            continue
        links = sum(1 for a in neighbors for b in adj[a] if b in neighbors) / 2
        out.append(links / (k * (k - 1) / 2))
    return out


def mmd(
    set_a: Sequence[DescriptorHistogram],
    set_b: Sequence[DescriptorHistogram],
    cfg: MetricConfig = MetricConfig(),
) -> float:
    """Biased (V-statistic) squared MMD with a Gaussian kernel over histograms."""
    if not set_a or not set_b:
        raise MetricError("mmd needs non-empty sets")
    a = np.asarray([h.frequencies for h in set_a])
    b = np.asarray([h.frequencies for h in set_b])
    if a.shape[1] != b.shape[1]:
        raise MetricError("histogram dimensions differ between sets")
    kaa = _gaussian_gram(a, a, cfg.sigma).mean()
    kbb = _gaussian_gram(b, b, cfg.sigma).mean()
    kab = _gaussian_gram(a, b, cfg.sigma).mean()
    return float(kaa + kbb - 2.0 * kab)


def _gaussian_gram(a: np.ndarray, b: np.ndarray, sigma: float) -> np.ndarray:
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=-1)
    return np.exp(-d2 / (2.0 * sigma**2))


# ---------------------------------------------------------------------------
# Neighborhood-pair kernel (node-only (0,0) term excluded)

def nspdk_features(g: SceneGraph, cfg: MetricConfig = MetricConfig()) -> dict[int, float]:
    """Sparse counts of hashed (rooted-ball, rooted-ball, r, d) encodings for
    all configured radius/distance combinations except (0, 0)."""
    ids = [nid for nid, _ in g.nodes]
    dist = _all_pairs_undirected_distances(g)
    ball_hash: dict[tuple[int, int], int] = {}
    for r in cfg.nspdk_radii:
        for u in ids:
            ball_hash[(u, r)] = _rooted_ball_hash(g, u, r, dist)
    feats: dict[int, float] = {}
    for r in cfg.nspdk_radii:
        for d in cfg.nspdk_distances:
            if r == 0 and d == 0:
                continue
            for i, u in enumerate(ids):
                for w in ids[i + 1 :]:
                    if dist.get((u, w)) != d:
                        continue
                    hu, hw = ball_hash[(u, r)], ball_hash[(w, r)]
                    key = _hash64(f"{r}|{d}|{min(hu, hw)}|{max(hu, hw)}")
                    feats[key] = feats.get(key, 0.0) + 1.0
    return feats


def _all_pairs_undirected_distances(g: SceneGraph) -> dict[tuple[int, int], int]:
    adj: dict[int, set[int]] = {nid: set() for nid, _ in g.nodes}
    for s, d, _ in g.edges:
        adj[s].add(d)
        adj[d].add(s)
    dist: dict[tuple[int, int], int] = {}
    for src in adj:
        level = {src}
        seen = {src}
        d = 0
        dist[(src, src)] = 0
        while level:
            nxt = set()
            for u in level:
                for v in adj[u]:
                    if v not in seen:
                        seen.add(v)
                        nxt.add(v)
            d += 1
            for v in nxt:
                dist[(src, v)] = d
            level = nxt
    return dist


def _rooted_ball_hash(
    g: SceneGraph, root: int, radius: int, dist: dict[tuple[int, int], int]
) -> int:
    label = dict(g.nodes)
    members = {nid for nid, _ in g.nodes if dist.get((root, nid), 1 << 30) <= radius}
    rows = []
    for w in members:
        incident = []
        for s, d, l in g.edges:
            if s == w and d in members:
                incident.append((dist[(root, d)], "f", l, label[d]))
            elif d == w and s in members:
                incident.append((dist[(root, s)], "b", l, label[s]))
        rows.append((dist[(root, w)], label[w], tuple(sorted(incident))))
    return _hash64(repr(sorted(rows)))


def _hash64(text: str) -> int:
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "big")


def _nspdk_kernel_matrix(
    feats_a: list[dict[int, float]], feats_b: list[dict[int, float]], sigma: float
) -> np.ndarray:
    def norm(f):
        n = np.sqrt(sum(v * v for v in f.values()))
        return {k: v / n for k, v in f.items()} if n > 0 else {}

    na = [norm(f) for f in feats_a]
    nb = [norm(f) for f in feats_b]
    out = np.empty((len(na), len(nb)))
    for i, fa in enumerate(na):
        for j, fb in enumerate(nb):
            if not fa and not fb:
                out[i, j] = 1.0  # two featureless graphs are alike
                continue
            cos = sum(v * fb.get(k, 0.0) for k, v in fa.items())
            out[i, j] = np.exp(-(2.0 - 2.0 * cos) / (2.0 * sigma**2))
    return out


def nspdk_star_mmd(
    set_a: Sequence[SceneGraph],
    set_b: Sequence[SceneGraph],
    cfg: MetricConfig = MetricConfig(),
) -> float:
    if not set_a or not set_b:
        raise MetricError("nspdk_star_mmd needs non-empty sets")
    fa = [nspdk_features(g, cfg) for g in set_a]
    fb = [nspdk_features(g, cfg) for g in set_b]
    kaa = _nspdk_kernel_matrix(fa, fa, cfg.sigma).mean()
    kbb = _nspdk_kernel_matrix(fb, fb, cfg.sigma).mean()
    kab = _nspdk_kernel_matrix(fa, fb, cfg.sigma).mean()
    return float(kaa + kbb - 2.0 * kab)


# ---------------------------------------------------------------------------
# Co-occurrence agreement

def _graph_list(x) -> list[SceneGraph]:
    return list(x.graphs) if isinstance(x, Corpus) else list(x)


def pair_cooccurrence(graphs: Sequence[SceneGraph]) -> dict[tuple[int, int], tuple[int, float]]:
    """(count of graphs with both, P(both | either)) per unordered label pair;
    identical-label pairs are excluded."""
    label_sets = [frozenset(lab for _, lab in g.nodes) for g in graphs]
    present: dict[int, int] = {}
    both: dict[tuple[int, int], int] = {}
    for labels in label_sets:
        for a in labels:
            present[a] = present.get(a, 0) + 1
        labs = sorted(labels)
        for i, a in enumerate(labs):
            for b in labs[i + 1 :]:
                both[(a, b)] = both.get((a, b), 0) + 1
    out = {}
    for (a, b), n_both in both.items():
        either = present[a] + present[b] - n_both
        out[(a, b)] = (n_both, n_both / either)
    return out


def obj_k(test, gen: Sequence[SceneGraph], k: int) -> float:
    """Agreement on the K most frequent test-set object pairs."""
    test_graphs = _graph_list(test)
    co_test = pair_cooccurrence(test_graphs)
    if len(co_test) < k:
        raise MetricError(f"only {len(co_test)} observed pairs, need K={k}")
    top = sorted(co_test.items(), key=lambda kv: (-kv[1][0], kv[0]))[:k]
    co_gen = pair_cooccurrence(_graph_list(gen))
    total = 0.0
    for pair, (_, p_test) in top:
        p_gen = co_gen.get(pair, (0, 0.0))[1]
        total += abs(p_test - p_gen)
    return 1.0 - total / k


def triple_cooccurrence(
    graphs: Sequence[SceneGraph],
) -> dict[tuple[int, int, int], tuple[int, float]]:
    """(count, P(triple present | subject and object labels co-occur)) per
    (subject-label, relation, object-label) triple."""
    label_sets = [frozenset(lab for _, lab in g.nodes) for g in graphs]
    triple_sets = []
    for g in graphs:
        label = dict(g.nodes)
        triple_sets.append(frozenset((label[s], l, label[d]) for s, d, l in g.edges))
    counts: dict[tuple[int, int, int], int] = {}
    for triples in triple_sets:
        for t in triples:
            counts[t] = counts.get(t, 0) + 1
    out = {}
    for t, n in counts.items():
        s_lab, _, o_lab = t
        pair_n = sum(1 for labels in label_sets if s_lab in labels and o_lab in labels)
        out[t] = (n, n / pair_n if pair_n else 0.0)
    return out


def trip_k(test, gen: Sequence[SceneGraph], k: int) -> float:
    test_graphs = _graph_list(test)
    gen_graphs = _graph_list(gen)
    co_test = triple_cooccurrence(test_graphs)
    if len(co_test) < k:
        raise MetricError(f"only {len(co_test)} observed triples, need K={k}")
    top = sorted(co_test.items(), key=lambda kv: (-kv[1][0], kv[0]))[:k]
    gen_label_sets = [frozenset(lab for _, lab in g.nodes) for g in gen_graphs]
    gen_triple_sets = []
    for g in gen_graphs:
        label = dict(g.nodes)
        gen_triple_sets.append(frozenset((label[s], l, label[d]) for s, d, l in g.edges))
    total = 0.0
    for (s_lab, rel, o_lab), (_, p_test) in top:
        pair_n = sum(1 for labels in gen_label_sets if s_lab in labels and o_lab in labels)
        if pair_n == 0:
            p_gen = 0.0  # the pair never co-occurs in the generated set
        else:
            trip_n = sum(1 for ts in gen_triple_sets if (s_lab, rel, o_lab) in ts)
            p_gen = trip_n / pair_n
        total += abs(p_test - p_gen)
    return 1.0 - total / k


# ---------------------------------------------------------------------------
# Edge precision

def graph_triples(g: SceneGraph) -> list[tuple[int, int, int]]:
    label = dict(g.nodes)
    return [(label[s], l, label[d]) for s, d, l in g.edges]


def corpus_triples(graphs) -> set[tuple[int, int, int]]:
    out: set[tuple[int, int, int]] = set()
    for g in _graph_list(graphs):
        out.update(graph_triples(g))
    return out


def mep(
    g: SceneGraph,
    train_triples: set[tuple[int, int, int]],
    test_triples: set[tuple[int, int, int]],
    r: float | None = None,
) -> float:
    """Brevity-penalized fraction of generated edges seen in train or test.

    r is the average edge count of the reference graphs; when unknown (None)
    the brevity penalty is skipped. An edgeless graph scores 0.
    """
    triples = graph_triples(g)
    c = len(triples)
    if c == 0:
        return 0.0
    known = train_triples | test_triples
    precision = sum(1 for t in triples if t in known) / c
    brevity = 1.0 if r is None else min(1.0, float(np.exp(1.0 - r / c)))
    return brevity * precision


def zsep(
    gen: Sequence[SceneGraph],
    train_triples: set[tuple[int, int, int]],
    test_triples: set[tuple[int, int, int]],
) -> tuple[float, bool]:
    """Fraction of generated-but-unseen-in-training edges found in test.

    Returns (value, no_novel_edges_flag); the value is 0 when no novel edges
    exist, with the flag set.
    """
    novel: set[tuple[int, int, int]] = set()
    for g in gen:
        novel.update(t for t in graph_triples(g) if t not in train_triples)
    if not novel:
        return 0.0, True
    return len(novel & test_triples) / len(novel), False


# ---------------------------------------------------------------------------
# Subgraph isomorphism (label-exact directed monomorphism)

def is_subgraph_isomorphic(small: SceneGraph, big: SceneGraph) -> bool:
    """True iff an injective, node-label-preserving map takes every directed
    labeled edge of `small` onto an identical edge of `big`."""
    if small.num_nodes > big.num_nodes or small.num_edges > big.num_edges:
        return False
    small_ids = [nid for nid, _ in small.nodes]
    small_label = dict(small.nodes)
    big_label = dict(big.nodes)
    big_edge = {(s, d): l for s, d, l in big.edges}
    s_out: dict[int, list[tuple[int, int]]] = {nid: [] for nid in small_ids}
    s_in: dict[int, list[tuple[int, int]]] = {nid: [] for nid in small_ids}
    for s, d, l in small.edges:
        s_out[s].append((d, l))
        s_in[d].append((s, l))

    # visit order: prefer nodes adjacent to already-ordered ones for pruning
    order: list[int] = []
    placed: set[int] = set()
    remaining = set(small_ids)
    while remaining:
        adjacent = [
            n
            for n in remaining
            if any(v in placed for v, _ in s_out[n]) or any(v in placed for v, _ in s_in[n])
        ]
        pick = min(adjacent) if adjacent else min(remaining)
        order.append(pick)
        placed.add(pick)
        remaining.remove(pick)

    candidates = {
        n: [b for b, blab in big.nodes if blab == small_label[n]] for n in small_ids
    }
    if any(not c for c in candidates.values()):
        return False

    mapping: dict[int, int] = {}
    used: set[int] = set()

    def extend(depth: int) -> bool:
        if depth == len(order):
            return True
        n = order[depth]
        for b in candidates[n]:
            if b in used:
                continue
            ok = True
            for v, l in s_out[n]:
                if v in mapping and big_edge.get((b, mapping[v])) != l:
                    ok = False
                    break
            if ok:
                for v, l in s_in[n]:
                    if v in mapping and big_edge.get((mapping[v], b)) != l:
                        ok = False
                        break
            if not ok:
                continue
            mapping[n] = b
            used.add(b)
            if extend(depth + 1):
                return True
            del mapping[n]
            used.remove(b)
        return False

    return extend(0)


def novelty(gen: Sequence[SceneGraph], train) -> float:
    """Fraction of generated graphs embeddable in no training graph."""
    gen = _graph_list(gen)
    if not gen:
        raise MetricError("novelty needs a non-empty generated set")
    train_graphs = _graph_list(train)
    hits = 0
    for g in gen:
        if not any(is_subgraph_isomorphic(g, t) for t in train_graphs):
            hits += 1
    return hits / len(gen)


def diversity(expansions: Sequence[SceneGraph]) -> float:
    """Fraction of expansions not embeddable into any other expansion."""
    if not expansions:
        raise MetricError("diversity needs at least one expansion")
    keep = 0
    for i, g in enumerate(expansions):
        if not any(
            is_subgraph_isomorphic(g, other)
            for j, other in enumerate(expansions)
            if j != i
        ):
            keep += 1
    return keep / len(expansions)


# ---------------------------------------------------------------------------
# Full report

@dataclass(frozen=True)
class MetricReport:
    mmd_degree: float
    mmd_clustering: float
    mmd_nspdk_star: float
    mmd_node_label: float
    mmd_edge_label: float
    node_count_reference: float
    node_count_predicted: float
    edge_count_reference: float
    edge_count_predicted: float
    obj_k: float
    trip_k: float
    mep_mean: float
    mep_edgeless_count: int
    zsep: float
    zsep_no_novel_edges: bool
    novelty: float
    diversity: float
    num_generated: int
    num_test: int
    splits: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _split(items: list, n: int) -> list[list]:
    return [items[i::n] for i in range(n)]


def evaluate_all(
    gen: Sequence[SceneGraph],
    train: Corpus,
    test: Corpus,
    cfg: MetricConfig = MetricConfig(),
    mep_refs: Sequence[float] | None = None,
) -> MetricReport:
    """Every metric in one report. MMD values are averaged over cfg.splits
    disjoint slices of the generated and test sets. mep_refs, when given,
    supplies the per-generated-graph reference edge count r for the brevity
    penalty; otherwise the penalty is skipped."""
    gen = _graph_list(gen)
    if not gen:
        raise MetricError("empty generated set")
    if not test.graphs:
        raise MetricError("empty test corpus")
    vocab = test.vocabulary
    if cfg.splits > min(len(gen), len(test.graphs)):
        raise MetricError("more splits than graphs")
    gen_splits = _split(gen, cfg.splits)
    test_splits = _split(list(test.graphs), cfg.splits)

    mmd_values: dict[str, float] = {}
    for kind in ("degree", "clustering", "node_label", "edge_label"):
        vals = []
        for gs, ts in zip(gen_splits, test_splits):
            ha = [descriptor_histogram(g, kind, vocab, cfg) for g in gs]
            hb = [descriptor_histogram(g, kind, vocab, cfg) for g in ts]
            vals.append(mmd(ha, hb, cfg))
        mmd_values[kind] = float(np.mean(vals))
    nspdk_vals = [
        nspdk_star_mmd(gs, ts, cfg) for gs, ts in zip(gen_splits, test_splits)
    ]

    train_t = corpus_triples(train)
    test_t = corpus_triples(test)
    mep_vals = []
    edgeless = 0
    for idx, g in enumerate(gen):
        r = mep_refs[idx] if mep_refs is not None else None
        v = mep(g, train_t, test_t, r)
        if g.num_edges == 0:
            edgeless += 1
        mep_vals.append(v)
    zsep_val, zsep_flag = zsep(gen, train_t, test_t)

    return MetricReport(
        mmd_degree=mmd_values["degree"],
        mmd_clustering=mmd_values["clustering"],
        mmd_nspdk_star=float(np.mean(nspdk_vals)),
        mmd_node_label=mmd_values["node_label"],
        mmd_edge_label=mmd_values["edge_label"],
        node_count_reference=float(np.mean([g.num_nodes for g in test.graphs])),
        node_count_predicted=float(np.mean([g.num_nodes for g in gen])),
        edge_count_reference=float(np.mean([g.num_edges for g in test.graphs])),
        edge_count_predicted=float(np.mean([g.num_edges for g in gen])),
        obj_k=obj_k(test, gen, cfg.top_k),
        trip_k=trip_k(test, gen, cfg.top_k),
        mep_mean=float(np.mean(mep_vals)),
        mep_edgeless_count=edgeless,
        zsep=zsep_val,
        zsep_no_novel_edges=zsep_flag,
        novelty=novelty(gen, train),
        diversity=diversity(gen),
        num_generated=len(gen),
        num_test=len(test.graphs),
        splits=cfg.splits,
    )
