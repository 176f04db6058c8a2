"""LLM agents: motion decomposition and retrieval-candidate selection."""
from __future__ import annotations

from .decompose import (
    FINE_PARTS,
    HALF_PARTS,
    AgentConfig,
    DecompositionSet,
    decompose,
    decompose_fine,
    decompose_half,
    decompose_k,
    parse_lines,
    sample_seeds,
)
from .prompts import render_fine, render_half, render_retrieval, template
from .providers import ChatCompletionsLLM, FixtureLLM, LlmProvider, fixture_key, prompt_hash
from .select import Selection, parse_index, select_candidate

__all__ = [
    "FINE_PARTS", "HALF_PARTS", "AgentConfig", "DecompositionSet", "decompose", "decompose_fine",
    "decompose_half", "decompose_k", "parse_lines", "sample_seeds", "render_fine", "render_half",
    "render_retrieval", "template", "ChatCompletionsLLM", "FixtureLLM", "LlmProvider", "fixture_key",
    "prompt_hash", "Selection", "parse_index", "select_candidate",
]
