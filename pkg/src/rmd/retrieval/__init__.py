"""Length-aware scoring, naive and agent retrieval, and the hierarchical level policy."""
from __future__ import annotations

from .estimator import HierarchicalRetriever
from .retrieve import (
    LEVEL_PARTS,
    Match,
    PartSelection,
    Query,
    RetrievalPlan,
    hierarchical_retrieve,
    naive_retrieve,
    retrieve_part_with_agent,
)
from .scoring import LEVELS, RetrievalConfig, choose_level, length_penalty, similarity_score, similarity_scores

__all__ = [
    "HierarchicalRetriever", "LEVEL_PARTS", "Match", "PartSelection", "Query", "RetrievalPlan",
    "hierarchical_retrieve", "naive_retrieve", "retrieve_part_with_agent", "LEVELS", "RetrievalConfig",
    "choose_level", "length_penalty", "similarity_score", "similarity_scores",
]
