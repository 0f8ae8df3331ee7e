"""Matplotlib figure rendering for the training and evaluation report paths."""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .graphs import SceneGraph, Vocabulary
from .metrics import MetricConfig, descriptor_histogram


def save_loss_curve(curve: Sequence[float], path: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(np.arange(1, len(curve) + 1), curve)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean loss per graph")
    ax.set_title("training loss")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_descriptor_comparison(
    gen: Sequence[SceneGraph],
    test: Sequence[SceneGraph],
    kind: str,
    vocab: Vocabulary,
    cfg: MetricConfig,
    path: str,
) -> None:
    """Side-by-side mean descriptor histograms of the two sets."""
    ha = np.mean([descriptor_histogram(g, kind, vocab, cfg).frequencies for g in gen], axis=0)
    hb = np.mean([descriptor_histogram(g, kind, vocab, cfg).frequencies for g in test], axis=0)
    x = np.arange(ha.size)
    width = 0.4
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(x - width / 2, ha, width, label="generated")
    ax.bar(x + width / 2, hb, width, label="test")
    if kind == "node_label":
        ax.set_xticks(x, vocab.object_labels, rotation=90, fontsize=6)
    elif kind == "edge_label":
        ax.set_xticks(x, vocab.relation_labels, rotation=90, fontsize=6)
    ax.set_ylabel("mean frequency")
    ax.set_title(f"{kind} descriptor")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
