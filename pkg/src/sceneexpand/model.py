"""Hierarchical autoregressive node/edge model for scene-graph expansion.

A node GRU predicts the next object label (or EOS) from the previous step's
encoding; for each predicted node an edge GRU, initialized from the node GRU's
hidden state through a small feedforward bridge, predicts relation labels
(including an explicit no-edge class) against the k most recent nodes, both
directions in turn. Node loss mixes plain cross-entropy with a proxy target
built from external label similarities; edge loss is class-balanced by
effective relation counts.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import nn
from .graphs import Corpus, SceneGraph, UnknownLabelError, Vocabulary
from .nn import Tensor
from .sequencer import (
    EdgePair,
    GraphSequence,
    SequenceStep,
    cluster_aware_bfs,
    sequence_to_graph,
    truncate_edges,
)


class ModelError(Exception):
    pass


class VocabularyMismatchError(ModelError):
    """Checkpoint vocabulary does not match the expected one."""


@dataclass(frozen=True)
class ExternalKnowledge:
    """Pairwise object-label similarity in [-1, 1] plus its mixing weight."""

    sim: np.ndarray  # (num_objects, num_objects), symmetric
    alpha: float = 0.2

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ModelError("alpha must be in [0, 1]")
        if self.sim.ndim != 2 or self.sim.shape[0] != self.sim.shape[1]:
            raise ModelError("similarity matrix must be square")
        if not np.allclose(self.sim, self.sim.T, atol=1e-9):
            raise ModelError("similarity matrix must be symmetric")

    @staticmethod
    def zeros(num_objects: int, alpha: float = 0.2) -> "ExternalKnowledge":
        return ExternalKnowledge(sim=np.zeros((num_objects, num_objects)), alpha=alpha)


def similarity_matrix(embeddings: dict[str, np.ndarray], vocab: Vocabulary, alpha: float = 0.2) -> ExternalKnowledge:
    """Cosine similarity over object-label embedding vectors."""
    missing = [l for l in vocab.object_labels if l not in embeddings]
    if missing:
        raise UnknownLabelError(f"labels missing from embedding table: {missing}")
    mat = np.stack([embeddings[l] for l in vocab.object_labels])
    norms = np.linalg.norm(mat, axis=1)
    if np.any(norms == 0):
        raise ModelError("zero-norm embedding vector")
    unit = mat / norms[:, None]
    sim = unit @ unit.T
    np.fill_diagonal(sim, 1.0)
    sim = np.clip((sim + sim.T) / 2.0, -1.0, 1.0)
    return ExternalKnowledge(sim=sim, alpha=alpha)


def compute_q(p_hat: np.ndarray, sim_row: np.ndarray) -> np.ndarray:
    """Closed-form minimizer of KL(q, p_hat) - E_{v~q} sim_row[v]."""
    w = p_hat * np.exp(sim_row)
    return w / w.sum()


def node_loss(p_true: np.ndarray, p_hat: np.ndarray, q: np.ndarray, alpha: float) -> float:
    """(1-alpha) * H(p_true, p_hat) + alpha * H(p_true, q)."""
    eps = 0.0  # inputs are strictly positive softmax outputs in practice
    ce = -float(np.sum(p_true * np.log(p_hat + eps)))
    ce_q = -float(np.sum(p_true * np.log(q + eps)))
    return (1.0 - alpha) * ce + alpha * ce_q


def class_balance_weight(n_e: int, beta: float) -> float:
    """Effective-number reweighting (1 - beta) / (1 - beta^N_e)."""
    if n_e < 1:
        raise ModelError("N_e must be >= 1")
    if not 0.0 < beta < 1.0:
        raise ModelError("beta must be in (0, 1)")
    return (1.0 - beta) / (1.0 - beta**n_e)


def edge_loss(p_true: np.ndarray, p_hat: np.ndarray, n_e: int, beta: float) -> float:
    ce = -float(np.sum(p_true * np.log(p_hat)))
    return class_balance_weight(n_e, beta) * ce


@dataclass(frozen=True)
class EdgeClassStats:
    """Occurrence count per relation class (no-edge last), floored at 1."""

    counts: tuple[int, ...]

    @staticmethod
    def from_corpus(corpus: Corpus) -> "EdgeClassStats":
        n_rel = corpus.vocabulary.num_relations
        counts = np.zeros(n_rel + 1, dtype=np.int64)
        for g in corpus.graphs:
            for _, _, lab in g.edges:
                counts[lab] += 1
            n = g.num_nodes
            counts[n_rel] += n * (n - 1) - g.num_edges  # unlabeled ordered pairs
        return EdgeClassStats(counts=tuple(int(max(1, c)) for c in counts))

    def weights(self, beta: float) -> np.ndarray:
        return np.asarray([class_balance_weight(c, beta) for c in self.counts])


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 0.001
    alpha: float = 0.2
    beta: float = 0.9999
    class_balanced: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ModelError("bad training config")
        if not 0.0 <= self.alpha <= 1.0 or not 0.0 < self.beta < 1.0:
            raise ModelError("alpha must be in [0,1], beta in (0,1)")


@dataclass
class ExpandOptions:
    num_samples: int = 1
    max_new_nodes: int = 10
    temperature: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.num_samples < 1 or self.max_new_nodes < 0 or self.temperature <= 0:
            raise ModelError("bad expansion options")


class ModelParams:
    """All learnable tensors plus the hyperparameters that shape them."""

    def __init__(
        self,
        vocab: Vocabulary,
        k: int = 3,
        alpha: float = 0.2,
        beta: float = 0.9999,
        embed_size: int = 64,
        hidden_size: int = 128,
        num_layers: int = 4,
        rng: np.random.Generator | None = None,
        embeddings: dict[str, np.ndarray] | None = None,
    ):
        if k < 1:
            raise ModelError("k must be >= 1")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.vocab = vocab
        self.k = k
        self.alpha = alpha
        self.beta = beta
        self.embed_size = embed_size
        self.hidden_size = hidden_size
        self.num_layers = num_layers
        n_obj, n_rel = vocab.num_objects, vocab.num_relations
        d = embed_size

        self.node_embed = nn.uniform_init(rng, (n_obj + 2, d), d)  # + SOS, EOS
        self.rel_embed = nn.uniform_init(rng, (n_rel + 1, d), d)  # + NO_EDGE
        self.node_embed_frozen = np.zeros(n_obj + 2, dtype=bool)
        self.rel_embed_frozen = np.zeros(n_rel + 1, dtype=bool)
        if embeddings:
            self._seed_embeddings(embeddings)

        self.f_node = nn.GruStack(d + 2 * k * d, hidden_size, num_layers, rng, "f_node")
        self.node_proj = nn.Linear(hidden_size, n_obj + 1, rng, "node_proj")  # + EOS
        self.f_edge = nn.GruStack(3 * d, hidden_size, num_layers, rng, "f_edge")
        self.edge_proj = nn.Linear(hidden_size, n_rel + 1, rng, "edge_proj")
        self.n2e_hidden = nn.Linear(hidden_size, hidden_size, rng, "n2e_hidden")
        self.n2e_out = nn.Linear(hidden_size, hidden_size * num_layers, rng, "n2e_out")

    def _seed_embeddings(self, table: dict[str, np.ndarray]) -> None:
        """Copy (projected) pretrained vectors in where labels are covered; those
        rows stay frozen during training."""
        d = self.embed_size
        for i, label in enumerate(self.vocab.object_labels):
            if label in table:
                self.node_embed.value[i] = _fit_dim(table[label], d)
                self.node_embed_frozen[i] = True
        for i, label in enumerate(self.vocab.relation_labels):
            if label in table:
                self.rel_embed.value[i] = _fit_dim(table[label], d)
                self.rel_embed_frozen[i] = True

    def params(self) -> dict[str, Tensor]:
        out = {"node_embed": self.node_embed, "rel_embed": self.rel_embed}
        out.update(self.f_node.params())
        out.update(self.node_proj.params())
        out.update(self.f_edge.params())
        out.update(self.edge_proj.params())
        out.update(self.n2e_hidden.params())
        out.update(self.n2e_out.params())
        return out

    # distribution sizes
    @property
    def num_node_classes(self) -> int:
        return self.vocab.num_objects + 1  # objects + EOS

    @property
    def num_edge_classes(self) -> int:
        return self.vocab.num_relations + 1  # relations + NO_EDGE

    def extended_sim(self, ek: ExternalKnowledge) -> np.ndarray:
        """Similarity over node classes including EOS (zero similarity)."""
        n = self.vocab.num_objects
        if ek.sim.shape[0] != n:
            raise ModelError("similarity matrix size does not match vocabulary")
        ext = np.zeros((n + 1, n + 1))
        ext[:n, :n] = ek.sim
        return ext


def _fit_dim(vec: np.ndarray, d: int) -> np.ndarray:
    if vec.size >= d:
        return vec[:d]
    out = np.zeros(d)
    out[: vec.size] = vec
    return out


# ---------------------------------------------------------------------------
# Step encodings (batched; a single sequence is a batch of one)

def _prev_step_indices(m: ModelParams, step: SequenceStep | None) -> tuple[int, np.ndarray]:
    """Node row + 2k relation rows encoding S_{i-1}; SOS encodes the start."""
    no_edge = m.vocab.no_edge_index
    rel_idx = np.full(2 * m.k, no_edge, dtype=np.int64)
    if step is None:
        return m.vocab.sos_index, rel_idx
    for s, pair in enumerate(step.edges[: m.k]):
        rel_idx[2 * s] = pair.forward
        rel_idx[2 * s + 1] = pair.backward
    return step.node, rel_idx


def _encode_prev_batch(m: ModelParams, steps: list[SequenceStep | None]) -> Tensor:
    node_rows = np.empty(len(steps), dtype=np.int64)
    rel_rows = np.empty((len(steps), 2 * m.k), dtype=np.int64)
    for b, step in enumerate(steps):
        node_rows[b], rel_rows[b] = _prev_step_indices(m, step)
    node_part = nn.gather_rows(m.node_embed, node_rows)  # (B, D)
    rel_part = nn.gather_rows(m.rel_embed, rel_rows.reshape(-1))  # (B*2k, D)
    rel_flat = nn.reshape(rel_part, (len(steps), 2 * m.k * m.embed_size))
    return nn.concat([node_part, rel_flat], axis=-1)


def _encode_edge_batch(
    m: ModelParams, a: np.ndarray, b: np.ndarray, prev_edge: np.ndarray
) -> Tensor:
    return nn.concat(
        [
            nn.gather_rows(m.node_embed, a),
            nn.gather_rows(m.node_embed, b),
            nn.gather_rows(m.rel_embed, prev_edge),
        ],
        axis=-1,
    )


def node_step(
    m: ModelParams, prev: SequenceStep | None, hidden: list[Tensor]
) -> tuple[np.ndarray, list[Tensor]]:
    """One node-model step; returns the distribution over objects + EOS."""
    x = _encode_prev_batch(m, [prev])
    h, hidden2 = m.f_node(x, hidden)
    logits = m.node_proj(h)
    probs = nn.softmax(logits).value[0]
    return probs, hidden2


def edge_step(
    m: ModelParams,
    v_a: int,
    v_b: int,
    hidden: list[Tensor],
    prev_edge: int | None = None,
) -> tuple[np.ndarray, list[Tensor]]:
    """One edge-model step for the ordered pair (v_a, v_b).

    prev_edge is the relation sampled for the opposite direction when this is
    the second call of the pair; it defaults to the no-edge class.
    """
    n_obj = m.vocab.num_objects
    if not (0 <= v_a < n_obj and 0 <= v_b < n_obj):
        raise UnknownLabelError(f"object label index out of range: {v_a}, {v_b}")
    pe = m.vocab.no_edge_index if prev_edge is None else prev_edge
    x = _encode_edge_batch(
        m, np.asarray([v_a]), np.asarray([v_b]), np.asarray([pe], dtype=np.int64)
    )
    h, hidden2 = m.f_edge(x, hidden)
    probs = nn.softmax(m.edge_proj(h)).value[0]
    return probs, hidden2


def _node2edge(m: ModelParams, h_node: Tensor) -> list[Tensor]:
    """Initialize the edge stack's hidden state from the node stack's."""
    bridge = m.n2e_out(nn.tanh(m.n2e_hidden(h_node)))
    batch = h_node.value.shape[0]
    parts = []
    for layer in range(m.num_layers):
        parts.append(
            nn.slice_cols(bridge, layer * m.hidden_size, (layer + 1) * m.hidden_size)
        )
    return parts


def _onehot(idx: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((idx.size, n))
    out[np.arange(idx.size), idx] = 1.0
    return out


def batched_sequence_loss(
    m: ModelParams,
    sequences: list[GraphSequence],
    ek: ExternalKnowledge,
    stats: EdgeClassStats,
    class_balanced: bool = True,
) -> tuple[Tensor, float]:
    """Teacher-forced loss over a batch of sequences (mean per sequence) and the
    summed log-likelihood of all node, EOS and edge-slot predictions."""
    bsz = len(sequences)
    if bsz == 0:
        raise ModelError("empty batch")
    lengths = [len(s.steps) for s in sequences]
    max_len = max(lengths)
    sim_ext = m.extended_sim(ek)
    alpha = ek.alpha
    cb = stats.weights(m.beta) if class_balanced else np.ones(m.num_edge_classes)
    eos = m.vocab.num_objects  # index inside the node-class distribution
    no_edge = m.vocab.no_edge_index

    hidden = m.f_node.init_hidden(bsz)
    loss_terms: list[Tensor] = []
    total_ll = 0.0

    for i in range(max_len + 1):
        prev_steps: list[SequenceStep | None] = []
        for b, s in enumerate(sequences):
            if i == 0 or i - 1 >= lengths[b]:
                prev_steps.append(None if i == 0 else s.steps[-1])
            else:
                prev_steps.append(s.steps[i - 1])
        x = _encode_prev_batch(m, prev_steps)
        h_node, hidden = m.f_node(x, hidden)
        logits = m.node_proj(h_node)

        node_target = np.zeros(bsz, dtype=np.int64)
        node_mask = np.zeros(bsz)
        for b, s in enumerate(sequences):
            if i < lengths[b]:
                node_target[b] = s.steps[i].node
                node_mask[b] = 1.0
            elif i == lengths[b]:
                node_target[b] = eos
                node_mask[b] = 1.0
        onehot = _onehot(node_target, m.num_node_classes)
        ce = nn.softmax_cross_entropy(logits, onehot)
        ce_q = nn.softmax_cross_entropy(logits + sim_ext[node_target], onehot)
        step_loss = nn.tsum(
            ((1.0 - alpha) * ce + alpha * ce_q) * node_mask
        )
        loss_terms.append(step_loss)
        logp = nn.log_softmax(logits).value
        total_ll += float((logp[np.arange(bsz), node_target] * node_mask).sum())

        # edge slots exist only for real (non-EOS) nodes past the first
        n_slots = min(i, m.k)
        if n_slots == 0:
            continue
        edge_mask = np.asarray([1.0 if i < lengths[b] else 0.0 for b in range(bsz)])
        if not edge_mask.any():
            continue
        h_edge = _node2edge(m, h_node)
        v_i = np.asarray(
            [sequences[b].steps[i].node if i < lengths[b] else 0 for b in range(bsz)],
            dtype=np.int64,
        )
        for slot in range(n_slots):
            j = i - 1 - slot
            v_j = np.asarray(
                [
                    sequences[b].steps[j].node if i < lengths[b] else 0
                    for b in range(bsz)
                ],
                dtype=np.int64,
            )
            fwd = np.asarray(
                [
                    sequences[b].steps[i].edges[slot].forward if i < lengths[b] else no_edge
                    for b in range(bsz)
                ],
                dtype=np.int64,
            )
            bwd = np.asarray(
                [
                    sequences[b].steps[i].edges[slot].backward if i < lengths[b] else no_edge
                    for b in range(bsz)
                ],
                dtype=np.int64,
            )
            pad = np.full(bsz, no_edge, dtype=np.int64)
            x1 = _encode_edge_batch(m, v_i, v_j, pad)
            h1, h_edge = m.f_edge(x1, h_edge)
            logits1 = m.edge_proj(h1)
            x2 = _encode_edge_batch(m, v_j, v_i, fwd)  # teacher edge feeds call 2
            h2, h_edge = m.f_edge(x2, h_edge)
            logits2 = m.edge_proj(h2)
            for logits_e, target in ((logits1, fwd), (logits2, bwd)):
                onehot_e = _onehot(target, m.num_edge_classes)
                ce_e = nn.softmax_cross_entropy(logits_e, onehot_e)
                loss_terms.append(nn.tsum(ce_e * (cb[target] * edge_mask)))
                logp_e = nn.log_softmax(logits_e).value
                total_ll += float(
                    (logp_e[np.arange(bsz), target] * edge_mask).sum()
                )

    total = loss_terms[0]
    for t in loss_terms[1:]:
        total = total + t
    return total * (1.0 / bsz), total_ll


def sequence_log_likelihood(
    m: ModelParams,
    s: GraphSequence,
    ek: ExternalKnowledge,
    stats: EdgeClassStats | None = None,
    class_balanced: bool = True,
) -> tuple[float, float]:
    """Teacher-forced log-likelihood and training loss of one sequence."""
    if stats is None:
        stats = EdgeClassStats(counts=tuple([1] * m.num_edge_classes))
    s = truncate_edges(s, m.k)
    loss, ll = batched_sequence_loss(m, [s], ek, stats, class_balanced)
    return ll, float(loss.value)


def _zero_frozen_grads(m: ModelParams) -> None:
    if m.node_embed.grad is not None:
        m.node_embed.grad[m.node_embed_frozen] = 0.0
    if m.rel_embed.grad is not None:
        m.rel_embed.grad[m.rel_embed_frozen] = 0.0


def train(
    m: ModelParams,
    corpus: Corpus,
    ek: ExternalKnowledge,
    cfg: TrainConfig,
) -> tuple[ModelParams, list[float]]:
    """Teacher-forced training: fresh cluster-aware sequencing every epoch,
    Adam updates per minibatch, deterministic for a fixed seed. Returns the
    (mutated) model and the per-epoch mean loss curve."""
    if not corpus.graphs:
        raise ModelError("empty corpus")
    if corpus.vocabulary.content_hash() != m.vocab.content_hash():
        raise VocabularyMismatchError("corpus vocabulary differs from model vocabulary")
    ek = replace(ek, alpha=cfg.alpha)
    stats = EdgeClassStats.from_corpus(corpus)
    optimizer = nn.Adam(m.params(), lr=cfg.learning_rate)
    curve: list[float] = []
    no_edge = m.vocab.no_edge_index
    for epoch in range(cfg.epochs):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(epoch,)))
        sequences = [
            cluster_aware_bfs(g, m.k, rng, no_edge) for g in corpus.graphs
        ]
        order = rng.permutation(len(sequences))
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = [sequences[idx] for idx in order[start : start + cfg.batch_size]]
            loss, _ = batched_sequence_loss(m, batch, ek, stats, cfg.class_balanced)
            if not np.isfinite(loss.value):
                raise ModelError(
                    f"non-finite loss at epoch {epoch}, batch {start // cfg.batch_size}"
                )
            optimizer.zero_grad()
            loss.backward()
            _zero_frozen_grads(m)
            optimizer.step()
            epoch_loss += float(loss.value) * len(batch)
        curve.append(epoch_loss / len(sequences))
    return m, curve


def expand(
    m: ModelParams,
    seed_graph: SceneGraph,
    ek: ExternalKnowledge,
    opt: ExpandOptions,
) -> list[SceneGraph]:
    """Grow the seed into num_samples expansions, each containing the seed.

    The seed is sequenced with cluster-aware BFS and teacher-forced through the
    node model; new nodes are sampled (with temperature) until EOS or the cap,
    and their edges to the k most recent nodes are set to the argmax relation.
    """
    for _, lab in seed_graph.nodes:
        if not 0 <= lab < m.vocab.num_objects:
            raise UnknownLabelError(f"seed label index {lab} outside vocabulary")
    out = []
    for sample in range(opt.num_samples):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=opt.seed, spawn_key=(sample,)))
        out.append(_expand_one(m, seed_graph, opt, rng))
    return out


def _expand_one(
    m: ModelParams, seed_graph: SceneGraph, opt: ExpandOptions, rng: np.random.Generator
) -> SceneGraph:
    no_edge = m.vocab.no_edge_index
    eos = m.vocab.num_objects
    n_seed = seed_graph.num_nodes
    # Untruncated sequencing keeps every seed edge for the output graph; the
    # model sees the k-window truncation.
    full_seq = cluster_aware_bfs(seed_graph, max(m.k, max(n_seed, 1)), rng, no_edge)
    seed_seq = truncate_edges(full_seq, m.k)

    hidden = m.f_node.init_hidden(1)
    steps: list[SequenceStep] = list(seed_seq.steps)
    for i in range(n_seed):
        prev = None if i == 0 else steps[i - 1]
        _, hidden = _node_forward(m, prev, hidden)

    labels = [st.node for st in steps]
    new_steps: list[SequenceStep] = []
    i = n_seed
    while len(new_steps) < opt.max_new_nodes:
        prev = steps[i - 1] if i > 0 else None
        logits, hidden = _node_forward(m, prev, hidden)
        probs = _tempered(logits, opt.temperature)
        choice = int(rng.choice(probs.size, p=probs))
        if choice == eos:
            break
        pairs = []
        h_edge = None
        if i > 0:
            h_node = hidden[-1]
            h_edge = _node2edge(m, h_node)
        for slot in range(min(i, m.k)):
            j = i - 1 - slot
            p1, h_edge = _edge_forward(m, choice, labels[j], h_edge, no_edge)
            e_fwd = int(np.argmax(p1))
            p2, h_edge = _edge_forward(m, labels[j], choice, h_edge, e_fwd)
            e_bwd = int(np.argmax(p2))
            pairs.append(EdgePair(forward=e_fwd, backward=e_bwd))
        step = SequenceStep(node=choice, edges=tuple(pairs))
        steps.append(step)
        new_steps.append(step)
        labels.append(choice)
        i += 1

    return _assemble_expansion(seed_graph, full_seq, new_steps, m.k, no_edge)


def _node_forward(
    m: ModelParams, prev: SequenceStep | None, hidden: list[Tensor]
) -> tuple[np.ndarray, list[Tensor]]:
    x = _encode_prev_batch(m, [prev])
    h, hidden2 = m.f_node(x, hidden)
    return m.node_proj(h).value[0], hidden2


def _edge_forward(
    m: ModelParams, a: int, b: int, hidden: list[Tensor], prev_edge: int
) -> tuple[np.ndarray, list[Tensor]]:
    x = _encode_edge_batch(
        m, np.asarray([a]), np.asarray([b]), np.asarray([prev_edge], dtype=np.int64)
    )
    h, hidden2 = m.f_edge(x, hidden)
    return nn.softmax(m.edge_proj(h)).value[0], hidden2


def _tempered(logits: np.ndarray, temperature: float) -> np.ndarray:
    z = logits / temperature
    z = z - z.max()
    p = np.exp(z)
    return p / p.sum()


def _assemble_expansion(
    seed_graph: SceneGraph,
    full_seq: GraphSequence,
    new_steps: list[SequenceStep],
    k: int,
    no_edge: int,
) -> SceneGraph:
    """Seed (original ids, all edges) plus generated nodes and edges."""
    order = list(full_seq.permutation)  # original seed node ids in sequence order
    next_id = (max(order) + 1) if order else 0
    ids = list(order)
    label = dict(seed_graph.nodes)
    nodes = list(seed_graph.nodes)
    edges = list(seed_graph.edges)
    for step in new_steps:
        nid = next_id
        next_id += 1
        pos = len(ids)
        for slot, pair in enumerate(step.edges):
            j = pos - 1 - slot
            prev_id = ids[j]
            if pair.forward != no_edge:
                edges.append((nid, prev_id, pair.forward))
            if pair.backward != no_edge:
                edges.append((prev_id, nid, pair.backward))
        ids.append(nid)
        nodes.append((nid, step.node))
        label[nid] = step.node
    return SceneGraph(nodes=tuple(nodes), edges=tuple(edges))


# ---------------------------------------------------------------------------
# Checkpoints

def save_model(m: ModelParams, path: str) -> None:
    meta = {
        "kind": "sceneexpand-model",
        "object_labels": list(m.vocab.object_labels),
        "relation_labels": list(m.vocab.relation_labels),
        "vocab_hash": m.vocab.content_hash(),
        "k": m.k,
        "alpha": m.alpha,
        "beta": m.beta,
        "embed_size": m.embed_size,
        "hidden_size": m.hidden_size,
        "num_layers": m.num_layers,
        "node_embed_frozen": [bool(b) for b in m.node_embed_frozen],
        "rel_embed_frozen": [bool(b) for b in m.rel_embed_frozen],
    }
    nn.save_params(path, m.params(), metadata=meta)


def load_model(path: str, expect_vocab_hash: str | None = None) -> ModelParams:
    arrays, meta = nn.load_params(path)
    if meta.get("kind") != "sceneexpand-model":
        raise ModelError("checkpoint does not contain an expansion model")
    if expect_vocab_hash is not None and meta["vocab_hash"] != expect_vocab_hash:
        raise VocabularyMismatchError(
            f"checkpoint vocabulary hash {meta['vocab_hash'][:12]} != expected {expect_vocab_hash[:12]}"
        )
    vocab = Vocabulary(
        object_labels=tuple(meta["object_labels"]),
        relation_labels=tuple(meta["relation_labels"]),
    )
    m = ModelParams(
        vocab,
        k=meta["k"],
        alpha=meta["alpha"],
        beta=meta["beta"],
        embed_size=meta["embed_size"],
        hidden_size=meta["hidden_size"],
        num_layers=meta["num_layers"],
        rng=np.random.default_rng(0),
    )
    params = m.params()
    if set(params) != set(arrays):
        raise ModelError("checkpoint parameter names do not match the model")
    for name, tensor in params.items():
        if tensor.value.shape != arrays[name].shape:
            raise ModelError(f"shape mismatch for {name}")
        tensor.value = arrays[name]
    m.node_embed_frozen = np.asarray(meta["node_embed_frozen"], dtype=bool)
    m.rel_embed_frozen = np.asarray(meta["rel_embed_frozen"], dtype=bool)
    return m
