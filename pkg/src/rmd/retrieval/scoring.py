"""Length-aware similarity score and the level-selection rule."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgumentError

LEVELS = ("full", "half", "fine")
SCORE_RULES = ("max", "selected")
UNIT_TOL = 1e-5


@dataclass(frozen=True)
class RetrievalConfig:
    """``lam`` weights the length penalty; ``tau_full``/``tau_half`` gate the level choice.

    ``score_rule`` picks the per-part score used for the level decision:
    ``"max"`` over the k candidates, or the agent-``"selected"`` candidate's own score.
    """

    lam: float = 0.05
    tau_full: float = 0.96
    tau_half: float = 0.96
    k: int = 5
    score_rule: str = "max"

    def __post_init__(self):
        if not self.lam >= 0:
            raise InvalidArgumentError("lam must be >= 0")
        for name in ("tau_full", "tau_half"):
            if not -1.0 <= getattr(self, name) <= 1.0:
                raise InvalidArgumentError(f"{name} must lie in [-1, 1]")
        if self.k < 1:
            raise InvalidArgumentError("k must be >= 1")
        if self.score_rule not in SCORE_RULES:
            raise InvalidArgumentError(f"score_rule must be one of {SCORE_RULES}")


def length_penalty(l_i, l_p, lam: float):
    """exp(-lam * |l_i - l_p| / max(l_i, l_p)), vectorized over ``l_i``."""
    l_i = np.asarray(l_i, dtype=np.float64)
    if np.any(l_i < 1) or l_p < 1:
        raise InvalidArgumentError("lengths must be >= 1")
    gamma = np.abs(l_i - l_p) / np.maximum(l_i, l_p)
    return np.exp(-lam * gamma)


def _unit(v, name) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise InvalidArgumentError(f"{name} must be a vector")
    if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
        raise InvalidArgumentError(f"{name} is not unit-norm")
    return v


def similarity_score(f_i, f_p, l_i: int, l_p: int, lam: float = 0.05) -> float:
    """Cosine of unit embeddings damped by the relative length mismatch."""
    f_i, f_p = _unit(f_i, "f_i"), _unit(f_p, "f_p")
    if f_i.shape != f_p.shape:
        raise InvalidArgumentError(f"embedding dims differ: {f_i.shape[0]} vs {f_p.shape[0]}")
    if min(l_i, l_p) < 1:
        raise InvalidArgumentError("lengths must be >= 1")
    cos = min(1.0, max(-1.0, float(f_i @ f_p)))
    return cos * math.exp(-lam * abs(l_i - l_p) / max(l_i, l_p))


def similarity_scores(matrix, f_p, lengths, l_p: int, lam: float = 0.05) -> np.ndarray:
    """Score every row of ``matrix`` (N, dim) against one query."""
    f_p = _unit(f_p, "query embedding")
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != f_p.shape[0]:
        raise InvalidArgumentError(f"embedding dims differ: {matrix.shape} vs query {f_p.shape}")
    cos = np.clip(matrix @ f_p, -1.0, 1.0)
    return cos * length_penalty(lengths, l_p, lam)


def choose_level(s_full: float, s_half_mean: float | None, config: RetrievalConfig = RetrievalConfig()) -> str:
    """Full if ``s_full >= tau_full``, else half if the half mean ``>= tau_half``, else fine."""
    if s_full >= config.tau_full:
        return "full"
    if s_half_mean is not None and s_half_mean >= config.tau_half:
        return "half"
    return "fine"
