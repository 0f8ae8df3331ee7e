"""Conditional scene-graph expansion: data model, sequence model, seed
extraction, evaluation metrics, CLI and HTTP service."""

from .graphs import Corpus, SceneGraph, Vocabulary

__all__ = ["Corpus", "SceneGraph", "Vocabulary"]
__version__ = "0.1.0"
