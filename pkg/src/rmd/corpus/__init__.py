"""Motion corpus: ingestion, caption decomposition, embedding and the JSONL index."""
from __future__ import annotations

from .build import build_database, decompose_entries, embed_all, feature_stats, ingest_corpus, read_annotations
from .database import EMBEDDING_KEYS, INFORM_LINE, DatabaseEntry, MotionDatabase, part_key
from .embedders import Embedder, RemoteEmbedder, StubEmbedder, TableEmbedder, fnv1a_64, unit_rows
from .index import load_index, save_index

__all__ = [
    "build_database", "decompose_entries", "embed_all", "feature_stats", "ingest_corpus", "read_annotations",
    "EMBEDDING_KEYS", "INFORM_LINE", "DatabaseEntry", "MotionDatabase", "part_key", "Embedder", "RemoteEmbedder",
    "StubEmbedder", "TableEmbedder", "fnv1a_64", "unit_rows", "load_index", "save_index",
]
