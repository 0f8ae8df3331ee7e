"""HTTP facade over expansion, seed extraction and vocabulary lookup.

The model is loaded once and shared read-only; every request draws its own rng
stream, so concurrent requests never interleave state.
"""

from __future__ import annotations

import json

import numpy as np
from fastapi import Body, FastAPI, HTTPException
from fastapi.responses import Response

from .graphs import Corpus, GraphError, UnknownLabelError, parse_graph, serialize_graph
from .metrics import is_subgraph_isomorphic
from .model import ExpandOptions, ExternalKnowledge, ModelError, ModelParams, expand
from .seeds import PageRankConfig, SeedExtractConfig, SeedExtractError, extract_seeds

MAX_SAMPLES = 16


def create_app(model: ModelParams, train_corpus: Corpus | None = None) -> FastAPI:
    app = FastAPI(title="sceneexpand")
    vocab = model.vocab
    ek = ExternalKnowledge.zeros(vocab.num_objects, alpha=model.alpha)
    train_graphs = list(train_corpus.graphs) if train_corpus else []

    def _parse_payload_graph(payload, field: str):
        if not isinstance(payload, dict) or field not in payload:
            raise HTTPException(400, f"request body must contain '{field}'")
        try:
            return parse_graph(json.dumps(payload[field]), vocab)
        except UnknownLabelError as exc:
            raise HTTPException(400, str(exc)) from exc
        except GraphError as exc:
            raise HTTPException(400, str(exc)) from exc

    @app.post("/api/expand")
    def handle_expand(payload: dict = Body(...)):
        if payload.get("vocab_hash") not in (None, vocab.content_hash()):
            raise HTTPException(422, "vocabulary hash mismatch")
        seed_graph = _parse_payload_graph(payload, "seed")
        num_samples = int(payload.get("num_samples", 1))
        if not 1 <= num_samples <= MAX_SAMPLES:
            raise HTTPException(400, f"num_samples must be in [1, {MAX_SAMPLES}]")
        try:
            opts = ExpandOptions(
                num_samples=num_samples,
                max_new_nodes=int(payload.get("max_new_nodes", 10)),
                temperature=float(payload.get("temperature", 1.0)),
                seed=int(payload.get("rng_seed", 0)),
            )
            graphs = expand(model, seed_graph, ek, opts)
        except (GraphError, ModelError, ValueError) as exc:
            raise HTTPException(400, str(exc)) from exc
        expansions = []
        for g in graphs:
            novel = not any(is_subgraph_isomorphic(g, t) for t in train_graphs)
            expansions.append(
                {"graph": json.loads(serialize_graph(g, vocab)), "novel": novel}
            )
        body = json.dumps({"expansions": expansions}, sort_keys=True)
        return Response(content=body, media_type="application/json")

    @app.get("/api/vocab")
    def handle_vocab():
        return {
            "object_labels": sorted(vocab.object_labels),
            "relation_labels": sorted(vocab.relation_labels),
            "vocab_hash": vocab.content_hash(),
        }

    @app.post("/api/seed-extract")
    def handle_seed_extract(payload: dict = Body(...)):
        g = _parse_payload_graph(payload, "graph")
        try:
            cfg = SeedExtractConfig(
                seeds_per_component=int(payload.get("seeds_per_component", 1)),
                max_subgraph_nodes=int(payload.get("max_subgraph_nodes", 4)),
            )
        except SeedExtractError as exc:
            raise HTTPException(400, str(exc)) from exc
        rng = np.random.default_rng(int(payload.get("seed", 0)))
        seeds = extract_seeds(g, cfg, PageRankConfig(), rng)
        return {"seeds": [json.loads(serialize_graph(s, vocab)) for s in seeds]}

    return app
