"""Retrieval agent: ask the LLM which candidate description fits a body part."""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import InvalidArgumentError
from .prompts import render_retrieval

_INDEX = re.compile(r"^\D*?(\d+)\D*$")


@dataclass(frozen=True)
class Selection:
    index: int
    fallback: bool = False
    reply: str | None = None


def parse_index(reply: str, n: int) -> int | None:
    """Parse the last non-empty line as a 1-based index in ``[1, n]``; return it 0-based."""
    lines = [line.strip() for line in reply.strip().splitlines() if line.strip()]
    if not lines:
        return None
    m = _INDEX.match(lines[-1])
    if m is None:
        return None
    i = int(m.group(1))
    return i - 1 if 1 <= i <= n else None


def select_candidate(provider, part: str, original_prompt: str, candidates, *, seed: int = 0,
                     max_retries: int = 2, prompt_dir=None) -> Selection:
    """Pick among ``candidates``, a sequence of (description, score) pairs.

    A single candidate short-circuits without a provider call. An unparseable
    reply after the retries falls back to the highest-scoring candidate
    (first one on ties) and sets ``fallback``.
    """
    candidates = list(candidates)
    if not candidates:
        raise InvalidArgumentError("select_candidate needs at least one candidate")
    if len(candidates) == 1:
        return Selection(0)
    prompt = render_retrieval(part, original_prompt, [text for text, _ in candidates], prompt_dir)
    reply = None
    for _ in range(max_retries + 1):
        reply = provider.complete(prompt, temperature=0.0, seed=seed)
        index = parse_index(reply, len(candidates))
        if index is not None:
            return Selection(index, False, reply)
    scores = [float(score) for _, score in candidates]
    return Selection(max(range(len(scores)), key=lambda i: (scores[i], -i)), True, reply)
