"""Scene-graph data model, vocabularies, corpus I/O and basic statistics.

A scene graph is a directed labeled graph: nodes carry object labels, edges
carry relation labels, at most one edge per ordered node pair, no self-loops.
Graphs may be disconnected. All types are immutable after construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# Sentinel labels used by the sequence model; never stored inside graphs.
SOS_LABEL = "<sos>"
EOS_LABEL = "<eos>"
NO_EDGE_LABEL = "<no-edge>"

_SENTINELS = {SOS_LABEL, EOS_LABEL, NO_EDGE_LABEL}


class GraphError(Exception):
    """Base class for scene-graph domain errors."""


class GraphFormatError(GraphError):
    """Malformed graph JSON."""


class UnknownLabelError(GraphError):
    """A label is not present in the vocabulary."""


class SelfLoopError(GraphError):
    """An edge connects a node to itself."""


class DuplicateEdgeError(GraphError):
    """More than one edge for the same ordered (src, dst) pair."""


class InfeasibleSpecError(GraphError):
    """A synthetic corpus spec cannot be satisfied."""


class EmptyCorpusError(GraphError):
    """An operation that needs graphs received none."""


@dataclass(frozen=True)
class Vocabulary:
    """Object and relation label sets with stable index<->label bijections."""

    object_labels: tuple[str, ...]
    relation_labels: tuple[str, ...]

    def __post_init__(self):
        for labels, kind in ((self.object_labels, "object"), (self.relation_labels, "relation")):
            if len(set(labels)) != len(labels):
                raise GraphError(f"duplicate {kind} labels")
            bad = _SENTINELS.intersection(labels)
            if bad:
                raise GraphError(f"reserved sentinel used as {kind} label: {sorted(bad)}")
        object.__setattr__(self, "_obj_index", {l: i for i, l in enumerate(self.object_labels)})
        object.__setattr__(self, "_rel_index", {l: i for i, l in enumerate(self.relation_labels)})

    @property
    def num_objects(self) -> int:
        return len(self.object_labels)

    @property
    def num_relations(self) -> int:
        return len(self.relation_labels)

    # Sentinel indices live just past the real labels so embedding tables can
    # cover V u {SOS, EOS} and E u {NO_EDGE} with contiguous rows.
    @property
    def sos_index(self) -> int:
        return self.num_objects

    @property
    def eos_index(self) -> int:
        return self.num_objects + 1

    @property
    def no_edge_index(self) -> int:
        return self.num_relations

    def object_index(self, label: str) -> int:
        try:
            return self._obj_index[label]
        except KeyError:
            raise UnknownLabelError(f"unknown object label: {label!r}") from None

    def relation_index(self, label: str) -> int:
        try:
            return self._rel_index[label]
        except KeyError:
            raise UnknownLabelError(f"unknown relation label: {label!r}") from None

    def content_hash(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for label in self.object_labels:
            h.update(label.encode() + b"\x00")
        h.update(b"\x01")
        for label in self.relation_labels:
            h.update(label.encode() + b"\x00")
        return h.hexdigest()


@dataclass(frozen=True)
class SceneGraph:
    """Immutable labeled directed graph. Labels are vocabulary indices."""

    nodes: tuple[tuple[int, int], ...]  # (node_id, object_label_index)
    edges: tuple[tuple[int, int, int], ...]  # (src_id, dst_id, relation_label_index)

    def __post_init__(self):
        ids = [nid for nid, _ in self.nodes]
        if len(set(ids)) != len(ids):
            raise GraphError("duplicate node ids")
        known = set(ids)
        seen_pairs = set()
        for src, dst, _ in self.edges:
            if src == dst:
                raise SelfLoopError(f"self-loop on node {src}")
            if src not in known or dst not in known:
                raise GraphError(f"edge endpoint missing: ({src}, {dst})")
            if (src, dst) in seen_pairs:
                raise DuplicateEdgeError(f"duplicate directed edge ({src}, {dst})")
            seen_pairs.add((src, dst))

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def label_of(self, node_id: int) -> int:
        for nid, lab in self.nodes:
            if nid == node_id:
                return lab
        raise GraphError(f"no such node: {node_id}")

    def canonical(self) -> "SceneGraph":
        return SceneGraph(
            nodes=tuple(sorted(self.nodes)),
            edges=tuple(sorted(self.edges)),
        )

    def induced_subgraph(self, node_ids: Iterable[int]) -> "SceneGraph":
        keep = set(node_ids)
        return SceneGraph(
            nodes=tuple((nid, lab) for nid, lab in self.nodes if nid in keep),
            edges=tuple((s, d, l) for s, d, l in self.edges if s in keep and d in keep),
        )


@dataclass(frozen=True)
class Corpus:
    graphs: tuple[SceneGraph, ...]
    vocabulary: Vocabulary
    split: str = "train"

    def __post_init__(self):
        n_obj = self.vocabulary.num_objects
        n_rel = self.vocabulary.num_relations
        for g in self.graphs:
            for _, lab in g.nodes:
                if not 0 <= lab < n_obj:
                    raise UnknownLabelError(f"node label index {lab} outside vocabulary")
            for _, _, lab in g.edges:
                if not 0 <= lab < n_rel:
                    raise UnknownLabelError(f"relation label index {lab} outside vocabulary")


def parse_graph(json_text: str, vocab: Vocabulary) -> SceneGraph:
    """Parse a graph from its JSON form, validating all invariants."""
    try:
        raw = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"malformed graph JSON: {exc}") from exc
    if not isinstance(raw, dict) or "nodes" not in raw or "edges" not in raw:
        raise GraphFormatError("graph JSON must be an object with 'nodes' and 'edges'")
    try:
        nodes = tuple((int(n["id"]), vocab.object_index(n["label"])) for n in raw["nodes"])
        edges = tuple(
            (int(e["src"]), int(e["dst"]), vocab.relation_index(e["label"]))
            for e in raw["edges"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphFormatError(f"bad node/edge record: {exc}") from exc
    return SceneGraph(nodes=nodes, edges=edges)


def serialize_graph(g: SceneGraph, vocab: Vocabulary) -> str:
    """Canonical JSON: nodes sorted by id, edges sorted by (src, dst, label)."""
    c = g.canonical()
    return json.dumps(
        {
            "nodes": [{"id": nid, "label": vocab.object_labels[lab]} for nid, lab in c.nodes],
            "edges": [
                {"src": s, "dst": d, "label": vocab.relation_labels[l]} for s, d, l in c.edges
            ],
        },
        separators=(",", ":"),
    )


def connected_components(g: SceneGraph) -> list[set[int]]:
    """Weakly connected components, ordered by smallest member id."""
    adj: dict[int, set[int]] = {nid: set() for nid, _ in g.nodes}
    for s, d, _ in g.edges:
        adj[s].add(d)
        adj[d].add(s)
    seen: set[int] = set()
    comps: list[set[int]] = []
    for nid in sorted(adj):
        if nid in seen:
            continue
        comp = {nid}
        frontier = [nid]
        while frontier:
            u = frontier.pop()
            for v in adj[u]:
                if v not in comp:
                    comp.add(v)
                    frontier.append(v)
        seen |= comp
        comps.append(comp)
    return comps


@dataclass(frozen=True)
class DegreeStats:
    node_counts: tuple[int, ...]
    edge_counts: tuple[int, ...]
    degree_values: tuple[int, ...]  # sorted distinct total degrees
    cumulative: tuple[float, ...]  # cumulative fraction of nodes with degree <= value
    percentile_k: int


def degree_stats(corpus: Corpus, percentile: float = 0.99) -> DegreeStats:
    """Total-degree (in + out) statistics pooled over every node of the corpus.

    percentile_k is the smallest k such that at least `percentile` of all node
    total-degrees are <= k; this is the window size used by the sequence model.
    """
    if not corpus.graphs:
        raise EmptyCorpusError("degree_stats needs a non-empty corpus")
    if not 0 < percentile <= 1:
        raise ValueError("percentile must be in (0, 1]")
    degrees: list[int] = []
    node_counts = []
    edge_counts = []
    for g in corpus.graphs:
        deg = {nid: 0 for nid, _ in g.nodes}
        for s, d, _ in g.edges:
            deg[s] += 1
            deg[d] += 1
        degrees.extend(deg.values())
        node_counts.append(g.num_nodes)
        edge_counts.append(g.num_edges)
    degrees_arr = np.sort(np.asarray(degrees))
    total = len(degrees_arr)
    values = np.unique(degrees_arr)
    cumulative = np.searchsorted(degrees_arr, values, side="right") / total
    k = int(values[np.argmax(cumulative >= percentile)])
    return DegreeStats(
        node_counts=tuple(node_counts),
        edge_counts=tuple(edge_counts),
        degree_values=tuple(int(v) for v in values),
        cumulative=tuple(float(c) for c in cumulative),
        percentile_k=k,
    )


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a reproducible synthetic corpus with clustered co-occurrence.

    structure "random" wires uniformly random node pairs; "hub" builds star
    motifs (a hub label, leaves all carrying the hub's fixed partner label,
    node count determined by the hub) whose sequences are predictable enough
    for a model to fit tightly.
    """

    num_graphs: int = 300
    num_object_labels: int = 15
    num_relation_labels: int = 6
    clusters: tuple[tuple[int, ...], ...] = ()  # groups of object-label indices
    skew_exponent: float = 1.0  # edge-label weight ~ 1/(rank+1)^skew
    min_nodes: int = 3
    max_nodes: int = 8
    leak_prob: float = 0.1  # chance a node label escapes its cluster
    edge_density: float = 1.2  # target edges ~ density * nodes
    structure: str = "random"
    seed: int = 0

    def __post_init__(self):
        if self.skew_exponent < 0:
            raise InfeasibleSpecError("skew exponent must be >= 0")
        if not 1 <= self.min_nodes <= self.max_nodes:
            raise InfeasibleSpecError("bad nodes-per-graph range")
        if self.structure not in ("random", "hub"):
            raise InfeasibleSpecError(f"unknown structure: {self.structure}")


def default_clusters(num_labels: int, num_clusters: int = 3) -> tuple[tuple[int, ...], ...]:
    """Partition label indices into near-equal disjoint clusters."""
    idx = np.array_split(np.arange(num_labels), num_clusters)
    return tuple(tuple(int(i) for i in part) for part in idx)


def generate_synthetic_corpus(spec: SyntheticSpec, split: str = "train") -> Corpus:
    """Deterministic clustered corpus: each graph draws its objects mostly from
    one cluster and edge labels from a rank-skewed distribution."""
    vocab = Vocabulary(
        object_labels=tuple(f"obj{i:02d}" for i in range(spec.num_object_labels)),
        relation_labels=tuple(f"rel{i:02d}" for i in range(spec.num_relation_labels)),
    )
    clusters = spec.clusters or default_clusters(spec.num_object_labels)
    if spec.structure == "random":
        # hub motifs reuse one partner label, so only this mode needs
        # clusters wide enough to fill a graph without repeats
        for c in clusters:
            if len(c) < spec.min_nodes:
                raise InfeasibleSpecError(
                    f"cluster of size {len(c)} smaller than min nodes-per-graph {spec.min_nodes}"
                )
    rel_weights = 1.0 / np.power(np.arange(spec.num_relation_labels) + 1.0, spec.skew_exponent)
    rel_weights /= rel_weights.sum()
    rng = np.random.default_rng(spec.seed)
    if spec.structure == "hub":
        return Corpus(
            graphs=_hub_motif_graphs(spec, clusters, rel_weights, rng),
            vocabulary=vocab,
            split=split,
        )
    graphs = []
    for _ in range(spec.num_graphs):
        cluster = clusters[rng.integers(len(clusters))]
        n = int(rng.integers(spec.min_nodes, spec.max_nodes + 1))
        labels = []
        in_cluster = min(n, len(cluster))
        labels.extend(int(l) for l in rng.choice(cluster, size=in_cluster, replace=False))
        while len(labels) < n:
            labels.append(int(rng.integers(spec.num_object_labels)))
        # independent leak draws keep some cross-cluster signal in the data
        for i in range(n):
            if rng.random() < spec.leak_prob:
                labels[i] = int(rng.integers(spec.num_object_labels))
        nodes = tuple((i, labels[i]) for i in range(n))
        target_edges = max(1, int(round(spec.edge_density * n))) if n > 1 else 0
        pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
        rng.shuffle(pairs)
        chosen = pairs[: min(target_edges, len(pairs))]
        edges = tuple(
            (s, d, int(rng.choice(spec.num_relation_labels, p=rel_weights))) for s, d in chosen
        )
        graphs.append(SceneGraph(nodes=nodes, edges=edges))
    return Corpus(graphs=tuple(graphs), vocabulary=vocab, split=split)


def _hub_motif_graphs(
    spec: SyntheticSpec,
    clusters: tuple[tuple[int, ...], ...],
    rel_weights: np.ndarray,
    rng: np.random.Generator,
) -> tuple[SceneGraph, ...]:
    """Star motifs keyed by a hub label.

    Every object label acts as the hub of one motif: its leaves all carry the
    next label in the same cluster (cyclic) and the node count is a fixed
    function of the hub, so node sequences stay highly predictable. Spoke
    relations are drawn independently from the rank-skewed distribution.
    """
    hubs = [(label, cluster) for cluster in clusters for label in cluster]
    size_span = spec.max_nodes - spec.min_nodes + 1
    motifs = []
    for t, (hub, cluster) in enumerate(hubs):
        partner = cluster[(cluster.index(hub) + 1) % len(cluster)]
        n = spec.min_nodes + t % size_span
        motifs.append((hub, partner, n))
    graphs = []
    for _ in range(spec.num_graphs):
        hub, partner, n = motifs[rng.integers(len(motifs))]
        labels = [hub] + [partner] * (n - 1)
        for i in range(n):
            if rng.random() < spec.leak_prob:
                labels[i] = int(rng.integers(spec.num_object_labels))
        nodes = tuple((i, labels[i]) for i in range(n))
        edges = tuple(
            (0, j, int(rng.choice(spec.num_relation_labels, p=rel_weights)))
            for j in range(1, n)
        )
        graphs.append(SceneGraph(nodes=nodes, edges=edges))
    return tuple(graphs)


# ---------------------------------------------------------------------------
# File formats: JSONL corpora, sidecar vocabulary, embedding tables.

def save_vocabulary(vocab: Vocabulary, path: str) -> None:
    with open(path, "w") as fh:
        for label in vocab.object_labels:
            fh.write(label + "\n")
        fh.write("\n")
        for label in vocab.relation_labels:
            fh.write(label + "\n")


def load_vocabulary(path: str) -> Vocabulary:
    with open(path) as fh:
        text = fh.read()
    try:
        objects_part, relations_part = text.split("\n\n", 1)
    except ValueError:
        raise GraphFormatError("vocabulary file needs a blank-line section separator") from None
    objects = tuple(l for l in objects_part.splitlines() if l)
    relations = tuple(l for l in relations_part.splitlines() if l)
    return Vocabulary(object_labels=objects, relation_labels=relations)


def save_corpus(corpus: Corpus, jsonl_path: str, vocab_path: str | None = None) -> None:
    with open(jsonl_path, "w") as fh:
        for g in corpus.graphs:
            fh.write(serialize_graph(g, corpus.vocabulary) + "\n")
    if vocab_path:
        save_vocabulary(corpus.vocabulary, vocab_path)


def load_corpus(jsonl_path: str, vocab_path: str, split: str = "train") -> Corpus:
    vocab = load_vocabulary(vocab_path)
    graphs = []
    with open(jsonl_path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                graphs.append(parse_graph(line, vocab))
    return Corpus(graphs=tuple(graphs), vocabulary=vocab, split=split)


def load_embeddings(path: str) -> dict[str, np.ndarray]:
    """Load a `label<TAB>float...` table; dimension must be constant."""
    table: dict[str, np.ndarray] = {}
    dim = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise GraphFormatError(f"embedding line {lineno}: need label<TAB>floats")
            vec = np.asarray([float(x) for x in parts[1:]], dtype=np.float64)
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise GraphFormatError(f"embedding line {lineno}: dimension {vec.size} != {dim}")
            table[parts[0]] = vec
    return table


def save_embeddings(table: dict[str, np.ndarray], path: str) -> None:
    with open(path, "w") as fh:
        for label, vec in table.items():
            fh.write(label + "\t" + "\t".join(repr(float(x)) for x in vec) + "\n")
