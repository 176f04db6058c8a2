"""Naive, agent-assisted and hierarchical retrieval over a MotionDatabase."""
from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .._seeding import derive_seed
from ..agents.decompose import FINE_PARTS, HALF_PARTS, AgentConfig, decompose_k
from ..agents.select import select_candidate
from ..corpus.database import MotionDatabase, part_key
from ..errors import InvalidArgumentError
from .scoring import LEVELS, RetrievalConfig, choose_level, similarity_scores

LEVEL_PARTS = {"full": ("full",), "half": HALF_PARTS, "fine": FINE_PARTS}


@dataclass(frozen=True)
class Query:
    prompt: str
    length: int
    embedding: np.ndarray | None = None

    def __post_init__(self):
        if not isinstance(self.prompt, str) or not self.prompt.strip():
            raise InvalidArgumentError("query prompt is empty")
        if int(self.length) < 1:
            raise InvalidArgumentError("query length must be >= 1")
        object.__setattr__(self, "length", int(self.length))


@dataclass(frozen=True)
class Match:
    entry_id: str
    key: str
    score: float


@dataclass(frozen=True)
class PartSelection:
    """Outcome for one body part.

    ``score`` is the value used for the level decision; ``selected_score`` is
    the agent-chosen candidate's own score and ``max_score`` the best over
    all candidates.
    """

    entry_id: str
    key: str
    score: float
    selected_score: float
    max_score: float
    fallback: bool = False
    query_descriptions: tuple = ()
    candidates: tuple = ()

    def to_dict(self) -> dict:
        return {
            "entry_id": self.entry_id, "key": self.key, "score": self.score,
            "selected_score": self.selected_score, "max_score": self.max_score, "agent_fallback": self.fallback,
            "query_descriptions": list(self.query_descriptions),
            "candidates": [{"entry_id": e, "score": s} for e, s in self.candidates],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PartSelection":
        return cls(d["entry_id"], d["key"], d["score"], d.get("selected_score", d["score"]),
                   d.get("max_score", d["score"]), d.get("agent_fallback", False),
                   tuple(d.get("query_descriptions", ())),
                   tuple((c["entry_id"], c["score"]) for c in d.get("candidates", ())))


@dataclass(frozen=True)
class RetrievalPlan:
    level: str
    selections: dict
    decided_scores: dict = field(default_factory=dict)
    prompt: str = ""
    length: int = 0

    def __post_init__(self):
        if self.level not in LEVELS:
            raise InvalidArgumentError(f"unknown level {self.level!r}")
        if set(self.selections) != set(LEVEL_PARTS[self.level]):
            raise InvalidArgumentError(f"{self.level} plan needs parts {LEVEL_PARTS[self.level]}, "
                                       f"got {sorted(self.selections)}")

    @property
    def entry_ids(self) -> dict:
        return {p: s.entry_id for p, s in self.selections.items()}

    def to_dict(self) -> dict:
        parts = LEVEL_PARTS[self.level]
        return {
            "prompt": self.prompt, "length": self.length, "level": self.level,
            "selections": {p: self.selections[p].to_dict() for p in parts},
            "decided_scores": {"s_full": self.decided_scores.get("s_full"),
                               "s_half_mean": self.decided_scores.get("s_half_mean")},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RetrievalPlan":
        try:
            return cls(d["level"], {p: PartSelection.from_dict(s) for p, s in d["selections"].items()},
                       dict(d.get("decided_scores", {})), d.get("prompt", ""), d.get("length", 0))
        except (KeyError, TypeError, AttributeError) as exc:
            raise InvalidArgumentError(f"malformed retrieval plan: {exc}") from None


def _check_embedder(db: MotionDatabase, embedder) -> None:
    if db.provider_tag is not None and embedder.tag != db.provider_tag:
        raise InvalidArgumentError(f"embedder {embedder.tag!r} does not match index provider {db.provider_tag!r}")


def naive_retrieve(db: MotionDatabase, query_embedding, l_p: int, key: str = "full", lam: float = 0.05) -> Match:
    """Best entry for one query description; ties go to the smallest entry id."""
    if len(db) == 0:
        raise InvalidArgumentError("cannot retrieve from an empty database")
    scores = similarity_scores(db.matrix(key), query_embedding, db.lengths, l_p, lam)
    best = scores.max()
    winner = min(np.flatnonzero(scores == best), key=lambda i: db.ids[i])
    return Match(db.ids[winner], key, float(scores[winner]))


def retrieve_part_with_agent(db: MotionDatabase, part: str, original_prompt: str, descriptions, l_p: int,
                             llm, embedder, config: RetrievalConfig = RetrievalConfig(), *, seed: int = 0,
                             max_retries: int = 2, prompt_dir=None) -> PartSelection:
    """Naively retrieve each of the k part descriptions, then let the agent choose."""
    descriptions = list(descriptions)
    if not descriptions:
        raise InvalidArgumentError(f"no query descriptions for part {part!r}")
    key = part_key(part)
    vecs = embedder.embed(descriptions)
    best: dict[str, float] = {}
    for v in vecs:
        m = naive_retrieve(db, v, l_p, key, config.lam)
        best[m.entry_id] = max(best.get(m.entry_id, -np.inf), m.score)
    candidates = list(best.items())
    texts = [(db[eid].descriptions()[key], s) for eid, s in candidates]
    sel = select_candidate(llm, part, original_prompt, texts, seed=derive_seed(seed, f"select:{part}"),
                           max_retries=max_retries, prompt_dir=prompt_dir)
    chosen_id, chosen_score = candidates[sel.index]
    max_score = max(s for _, s in candidates)
    return PartSelection(chosen_id, key, max_score if config.score_rule == "max" else chosen_score,
                         chosen_score, max_score, sel.fallback, tuple(descriptions), tuple(candidates))


def _full_selection(db, prompt, embedding, l_p, config) -> PartSelection:
    m = naive_retrieve(db, embedding, l_p, "full", config.lam)
    return PartSelection(m.entry_id, "full", m.score, m.score, m.score, False, (prompt,), ((m.entry_id, m.score),))


def hierarchical_retrieve(db: MotionDatabase, query: Query, config: RetrievalConfig, llm, embedder,
                          agent_config: AgentConfig | None = None, *, seed: int = 0, prompt_dir=None,
                          force_level: str | None = None) -> RetrievalPlan:
    """Prefer the coarsest level whose score clears its threshold.

    The full level retrieves once with the raw prompt. Half and fine levels
    use k sampled decompositions of the prompt; decompositions are only
    requested when the full level fails. ``force_level`` bypasses the rule
    (the scores that were evaluated are still reported).
    """
    if force_level is not None and force_level not in LEVELS:
        raise InvalidArgumentError(f"unknown level {force_level!r}")
    _check_embedder(db, embedder)
    agent_config = dataclasses.replace(agent_config or AgentConfig(), k=config.k)
    emb = query.embedding if query.embedding is not None else embedder.embed([query.prompt])[0]
    full = _full_selection(db, query.prompt, emb, query.length, config)
    scores = {"s_full": full.score, "s_half_mean": None}

    def plan(level, selections):
        return RetrievalPlan(level, selections, scores, query.prompt, query.length)

    if force_level == "full" or (force_level is None and choose_level(full.score, None, config) == "full"):
        return plan("full", {"full": full})

    sets = decompose_k(llm, query.prompt, agent_config, seed=derive_seed(seed, "query-decompose"),
                       prompt_dir=prompt_dir)

    def run(parts):
        def one(part):
            return retrieve_part_with_agent(db, part, query.prompt, [s.part(part) for s in sets], query.length,
                                            llm, embedder, config, seed=seed,
                                            max_retries=agent_config.max_retries, prompt_dir=prompt_dir)

        with ThreadPoolExecutor(max_workers=min(agent_config.max_in_flight, len(parts))) as pool:
            return dict(zip(parts, pool.map(one, parts)))

    half = run(HALF_PARTS)
    scores["s_half_mean"] = float(np.mean([half[p].score for p in HALF_PARTS]))
    level = force_level or choose_level(full.score, scores["s_half_mean"], config)
    if level == "half":
        return plan("half", half)
    return plan("fine", run(FINE_PARTS))
