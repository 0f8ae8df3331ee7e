"""Command-line entry point: synth, train, expand, eval, seed-extract, serve.

All randomness flows from one --seed, fanned out to components through fixed
SeedSequence spawn keys, so every subcommand is reproducible. Exit codes:
0 success, 1 module error, 2 bad arguments.
"""

from __future__ import annotations

import csv
import json
import os
import sys

import click
import numpy as np

from . import metrics as metrics_mod
from . import plots
from .graphs import (
    Corpus,
    GraphError,
    SceneGraph,
    SyntheticSpec,
    degree_stats,
    generate_synthetic_corpus,
    load_corpus,
    load_embeddings,
    load_vocabulary,
    parse_graph,
    save_corpus,
    serialize_graph,
)
from .metrics import MetricConfig, MetricError, evaluate_all, is_subgraph_isomorphic
from .model import (
    ExpandOptions,
    ExternalKnowledge,
    ModelError,
    ModelParams,
    TrainConfig,
    expand as expand_model,
    load_model,
    save_model,
    similarity_matrix,
    train as train_model,
)
from .seeds import PageRankConfig, SeedExtractConfig, SeedExtractError, extract_seeds

_DOMAIN_ERRORS = (GraphError, ModelError, MetricError, SeedExtractError, OSError)


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        import tomllib

        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except ImportError:
        cfg = {}
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if "=" in line:
                    key, val = (x.strip() for x in line.split("=", 1))
                    cfg[key] = json.loads(val) if val[:1] in '["0123456789-tf' else val.strip('"')
        return cfg


def _resolve(ctx: click.Context, config: dict, **values):
    """Apply config-file values for parameters the user left at their default."""
    out = {}
    for name, val in values.items():
        source = ctx.get_parameter_source(name)
        if source == click.core.ParameterSource.DEFAULT and name in config:
            out[name] = config[name]
        else:
            out[name] = val
    return out


@click.group()
def main():
    """Scene-graph expansion toolkit."""


@main.command()
@click.option("--out-corpus", required=True, type=click.Path())
@click.option("--out-vocab", required=True, type=click.Path())
@click.option("--num-graphs", default=300, show_default=True)
@click.option("--num-objects", default=15, show_default=True)
@click.option("--num-relations", default=6, show_default=True)
@click.option("--skew", default=1.0, show_default=True)
@click.option("--min-nodes", default=3, show_default=True)
@click.option("--max-nodes", default=8, show_default=True)
@click.option("--split", default="train", show_default=True)
@click.option("--seed", default=0, show_default=True)
def synth(out_corpus, out_vocab, num_graphs, num_objects, num_relations, skew, min_nodes, max_nodes, split, seed):
    """Generate a clustered synthetic corpus."""
    try:
        spec = SyntheticSpec(
            num_graphs=num_graphs,
            num_object_labels=num_objects,
            num_relation_labels=num_relations,
            skew_exponent=skew,
            min_nodes=min_nodes,
            max_nodes=max_nodes,
            seed=seed,
        )
        corpus = generate_synthetic_corpus(spec, split=split)
        save_corpus(corpus, out_corpus, out_vocab)
    except _DOMAIN_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"wrote {len(corpus.graphs)} graphs to {out_corpus}")


@main.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--vocab", "vocab_path", required=True, type=click.Path(exists=True))
@click.option("--embeddings", "embeddings_path", type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--epochs", default=100, show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@click.option("--lr", default=0.001, show_default=True)
@click.option("--alpha", default=0.2, show_default=True)
@click.option("--beta", default=0.9999, show_default=True)
@click.option("--k", default=None, type=int, help="edge window; default: 99th-percentile degree")
@click.option("--embed-dim", default=64, show_default=True)
@click.option("--hidden", default=128, show_default=True)
@click.option("--layers", default=4, show_default=True)
@click.option("--no-class-balance", is_flag=True, default=False)
@click.option("--seed", default=0, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.pass_context
def train(ctx, corpus_path, vocab_path, embeddings_path, out_dir, epochs, batch_size, lr, alpha, beta, k, embed_dim, hidden, layers, no_class_balance, seed, config_path):
    """Train an expansion model; writes checkpoint, loss CSV and loss figure."""
    cfg_file = _load_config_file(config_path)
    vals = _resolve(
        ctx, cfg_file,
        epochs=epochs, batch_size=batch_size, lr=lr, alpha=alpha, beta=beta,
        k=k, embed_dim=embed_dim, hidden=hidden, layers=layers, seed=seed,
    )
    try:
        corpus = load_corpus(corpus_path, vocab_path, split="train")
        if vals["k"] is None:
            vals["k"] = degree_stats(corpus, 0.99).percentile_k
        embeddings = load_embeddings(embeddings_path) if embeddings_path else None
        init_rng = np.random.default_rng(np.random.SeedSequence(entropy=vals["seed"], spawn_key=(0,)))
        model = ModelParams(
            corpus.vocabulary,
            k=max(1, vals["k"]),
            alpha=vals["alpha"],
            beta=vals["beta"],
            embed_size=vals["embed_dim"],
            hidden_size=vals["hidden"],
            num_layers=vals["layers"],
            rng=init_rng,
            embeddings=embeddings,
        )
        if embeddings:
            ek = similarity_matrix(embeddings, corpus.vocabulary, alpha=vals["alpha"])
        else:
            ek = ExternalKnowledge.zeros(corpus.vocabulary.num_objects, alpha=vals["alpha"])
        tc = TrainConfig(
            epochs=vals["epochs"],
            batch_size=vals["batch_size"],
            learning_rate=vals["lr"],
            alpha=vals["alpha"],
            beta=vals["beta"],
            class_balanced=not no_class_balance,
            seed=int(np.random.SeedSequence(entropy=vals["seed"], spawn_key=(1,)).generate_state(1)[0]),
        )
        model, curve = train_model(model, corpus, ek, tc)
        os.makedirs(out_dir, exist_ok=True)
        save_model(model, os.path.join(out_dir, "checkpoint.bin"))
        with open(os.path.join(out_dir, "loss_curve.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "mean_loss"])
            for i, v in enumerate(curve, 1):
                writer.writerow([i, repr(v)])
        if curve:
            plots.save_loss_curve(curve, os.path.join(out_dir, "loss_curve.png"))
    except _DOMAIN_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"trained {vals['epochs']} epochs; checkpoint in {out_dir}")


@main.command()
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--seed-graph", "seed_graph_path", required=True, type=click.Path(exists=True))
@click.option("--vocab", "vocab_path", type=click.Path(exists=True), help="assert checkpoint vocabulary matches")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--num-samples", default=1, show_default=True)
@click.option("--max-new-nodes", default=10, show_default=True)
@click.option("--temperature", default=1.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
def expand(checkpoint, seed_graph_path, vocab_path, out_path, num_samples, max_new_nodes, temperature, seed):
    """Expand a seed graph into num-samples enriched graphs (JSONL)."""
    try:
        expect = load_vocabulary(vocab_path).content_hash() if vocab_path else None
        model = load_model(checkpoint, expect_vocab_hash=expect)
        with open(seed_graph_path) as fh:
            seed_graph = parse_graph(fh.read(), model.vocab)
        ek = ExternalKnowledge.zeros(model.vocab.num_objects, alpha=model.alpha)
        opts = ExpandOptions(
            num_samples=num_samples,
            max_new_nodes=max_new_nodes,
            temperature=temperature,
            seed=seed,
        )
        graphs = expand_model(model, seed_graph, ek, opts)
        with open(out_path, "w") as fh:
            for g in graphs:
                fh.write(serialize_graph(g, model.vocab) + "\n")
    except _DOMAIN_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"wrote {len(graphs)} expansions to {out_path}")


@main.command(name="eval")
@click.option("--generated", "generated_path", required=True, type=click.Path(exists=True))
@click.option("--train-corpus", "train_path", required=True, type=click.Path(exists=True))
@click.option("--test-corpus", "test_path", required=True, type=click.Path(exists=True))
@click.option("--vocab", "vocab_path", required=True, type=click.Path(exists=True))
@click.option("--seeds", "seeds_path", type=click.Path(exists=True), help="per-line seed for each generated graph (enables brevity penalty)")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--splits", default=1, show_default=True)
@click.option("--top-k", default=20, show_default=True)
def eval_cmd(generated_path, train_path, test_path, vocab_path, seeds_path, out_dir, splits, top_k):
    """Evaluate generated graphs; writes report JSON, CSV and figures."""
    try:
        vocab = load_vocabulary(vocab_path)
        train_corpus = load_corpus(train_path, vocab_path, split="train")
        test_corpus = load_corpus(test_path, vocab_path, split="test")
        gen = _load_graph_lines(generated_path, vocab)
        if not gen:
            raise MetricError("empty generated set")
        cfg = MetricConfig(top_k=top_k, splits=splits)
        mep_refs = None
        per_seed = None
        if seeds_path:
            seeds = _load_graph_lines(seeds_path, vocab)
            if len(seeds) != len(gen):
                raise MetricError("seeds file must have one seed per generated graph")
            mep_refs = [_reference_edge_count(s, test_corpus) for s in seeds]
            train_t = metrics_mod.corpus_triples(train_corpus)
            test_t = metrics_mod.corpus_triples(test_corpus)
            per_seed = [
                metrics_mod.mep(g, train_t, test_t, r) for g, r in zip(gen, mep_refs)
            ]
        report = evaluate_all(gen, train_corpus, test_corpus, cfg, mep_refs=mep_refs)
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.json"), "w") as fh:
            fh.write(report.to_json() + "\n")
        with open(os.path.join(out_dir, "report.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["metric", "value"])
            for key, val in sorted(json.loads(report.to_json()).items()):
                writer.writerow([key, val])
        if per_seed is not None:
            with open(os.path.join(out_dir, "per_seed_mep.csv"), "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["index", "reference_edges", "mep"])
                for i, (r, v) in enumerate(zip(mep_refs, per_seed)):
                    writer.writerow([i, repr(r), repr(v)])
        for kind in ("degree", "edge_label", "node_label"):
            plots.save_descriptor_comparison(
                gen, list(test_corpus.graphs), kind, vocab, cfg,
                os.path.join(out_dir, f"descriptor_{kind}.png"),
            )
    except _DOMAIN_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"report written to {out_dir}")


def _load_graph_lines(path: str, vocab) -> list[SceneGraph]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(parse_graph(line, vocab))
    return out


def _reference_edge_count(seed: SceneGraph, test_corpus: Corpus) -> float:
    """Mean edge count over test graphs that contain the seed; falls back to
    the corpus mean when no test graph contains it."""
    containing = [g for g in test_corpus.graphs if is_subgraph_isomorphic(seed, g)]
    if not containing:
        containing = list(test_corpus.graphs)
    return float(np.mean([g.num_edges for g in containing]))


@main.command(name="seed-extract")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--vocab", "vocab_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--seeds-per-component", default=1, show_default=True)
@click.option("--max-size", default=4, show_default=True)
@click.option("--seed", default=0, show_default=True)
def seed_extract(corpus_path, vocab_path, out_path, seeds_per_component, max_size, seed):
    """Extract seed subgraphs from every graph of a corpus (JSONL)."""
    try:
        corpus = load_corpus(corpus_path, vocab_path, split="test")
        cfg = SeedExtractConfig(
            seeds_per_component=seeds_per_component, max_subgraph_nodes=max_size
        )
        count = 0
        with open(out_path, "w") as fh:
            for gi, g in enumerate(corpus.graphs):
                rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(gi,)))
                for s in extract_seeds(g, cfg, PageRankConfig(), rng):
                    fh.write(serialize_graph(s, corpus.vocabulary) + "\n")
                    count += 1
    except _DOMAIN_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"wrote {count} seeds to {out_path}")


@main.command()
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--train-corpus", "train_path", type=click.Path(exists=True), help="used for novelty flags")
@click.option("--vocab", "vocab_path", type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(checkpoint, train_path, vocab_path, host, port):
    """Serve expansion, seed extraction and vocabulary over HTTP."""
    try:
        import uvicorn

        from .service import create_app

        model = load_model(checkpoint)
        train_corpus = None
        if train_path and vocab_path:
            train_corpus = load_corpus(train_path, vocab_path, split="train")
        app = create_app(model, train_corpus=train_corpus)
    except _DOMAIN_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
