"""Decomposition agent: split a motion description into per-part sentences.

Replies are parsed strictly by shape (line count, non-empty lines). Labels
such as ``"Upper body motion:"`` are stripped if the model adds them despite
the instructions. Shape violations resend the identical prompt up to
``max_retries`` times.
"""
from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .._seeding import derive_seed
from ..errors import DecompositionError, InvalidArgumentError, ProviderError
from .prompts import render_fine, render_half

log = logging.getLogger(__name__)

HALF_PARTS = ("upper", "lower")
FINE_PARTS = ("head", "torso", "left_arm", "right_arm", "lower_body", "trajectory")
LOWER_LIMB_JOIN = "; "

_LABEL = re.compile(
    r"^\s*(?:[-*•]\s*|\d+[.)]\s*)?"
    r"(?:upper(?:[ -]body)?(?: motion)?|lower(?:[ -]body)?(?: motion)?|head|spine|torso|"
    r"(?:left|right) (?:upper|lower) limb|(?:left|right) (?:arm|leg)|"
    r"(?:overall )?(?:displacement/orientation|displacement|orientation|trajectory)"
    r"(?:\s*\(trajectory\))?)\s*:\s*",
    re.IGNORECASE,
)


@dataclass(frozen=True)
class DecompositionSet:
    """Half-body and fine-grained sub-descriptions of one motion text."""

    upper: str
    lower: str
    head: str
    torso: str
    left_arm: str
    right_arm: str
    lower_body: str
    trajectory: str

    def __post_init__(self):
        for name in HALF_PARTS + FINE_PARTS:
            value = getattr(self, name)
            if not isinstance(value, str) or not value.strip():
                raise InvalidArgumentError(f"decomposition part {name!r} is empty")

    @property
    def half(self) -> dict:
        return {p: getattr(self, p) for p in HALF_PARTS}

    @property
    def fine(self) -> dict:
        return {p: getattr(self, p) for p in FINE_PARTS}

    def part(self, name: str) -> str:
        if name not in HALF_PARTS + FINE_PARTS:
            raise InvalidArgumentError(f"unknown part {name!r}")
        return getattr(self, name)

    def descriptions(self) -> dict:
        """Description keys as stored in the index: ``half.upper``, ``fine.head``..."""
        d = {f"half.{k}": v for k, v in self.half.items()}
        d.update({f"fine.{k}": v for k, v in self.fine.items()})
        return d

    def to_dict(self) -> dict:
        return {"half": self.half, "fine": self.fine}

    @classmethod
    def from_dict(cls, d: dict) -> "DecompositionSet":
        try:
            return cls(**{p: d["half"][p] for p in HALF_PARTS}, **{p: d["fine"][p] for p in FINE_PARTS})
        except (KeyError, TypeError) as exc:
            raise InvalidArgumentError(f"incomplete decomposition record: missing {exc}") from None

    @classmethod
    def combine(cls, half: dict, fine: dict) -> "DecompositionSet":
        return cls(**half, **fine)


@dataclass(frozen=True)
class AgentConfig:
    k: int = 5
    temperature: float = 0.7
    max_retries: int = 2
    max_in_flight: int = 4

    def __post_init__(self):
        if self.k < 1:
            raise InvalidArgumentError("k must be >= 1")
        if self.max_retries < 0:
            raise InvalidArgumentError("max_retries must be >= 0")
        if self.max_in_flight < 1:
            raise InvalidArgumentError("max_in_flight must be >= 1")


def parse_lines(reply: str, expected: int) -> list[str] | None:
    """Return ``expected`` label-free lines, or None if the shape is wrong."""
    lines = [line.strip() for line in reply.strip().splitlines()]
    lines = [_LABEL.sub("", line, count=1).strip() for line in lines if line]
    if len(lines) != expected or not all(lines):
        return None
    return lines


def _ask(provider, prompt: str, expected: int, temperature: float, seed: int, max_retries: int) -> list[str]:
    reply = ""
    for _ in range(max_retries + 1):
        reply = provider.complete(prompt, temperature=temperature, seed=seed)
        lines = parse_lines(reply, expected)
        if lines is not None:
            return lines
    raise DecompositionError(f"expected {expected} non-empty lines after {max_retries + 1} attempts", raw_reply=reply)


def _check_text(text: str) -> None:
    if not isinstance(text, str) or not text.strip():
        raise InvalidArgumentError("motion description is empty")


def decompose_half(provider, text: str, *, temperature: float = 0.0, seed: int = 0,
                   max_retries: int = 2, prompt_dir=None) -> dict:
    _check_text(text)
    lines = _ask(provider, render_half(text, prompt_dir), 2, temperature, seed, max_retries)
    return dict(zip(HALF_PARTS, lines))


def decompose_fine(provider, text: str, *, temperature: float = 0.0, seed: int = 0,
                   max_retries: int = 2, prompt_dir=None) -> dict:
    """Seven reply lines; the two lower-limb lines are joined into ``lower_body``."""
    _check_text(text)
    head, spine, left, right, left_leg, right_leg, traj = _ask(
        provider, render_fine(text, prompt_dir), 7, temperature, seed, max_retries)
    return {"head": head, "torso": spine, "left_arm": left, "right_arm": right,
            "lower_body": left_leg + LOWER_LIMB_JOIN + right_leg, "trajectory": traj}


def decompose(provider, text: str, *, temperature: float = 0.0, seed: int = 0,
              max_retries: int = 2, prompt_dir=None) -> DecompositionSet:
    kw = dict(temperature=temperature, seed=seed, max_retries=max_retries, prompt_dir=prompt_dir)
    return DecompositionSet.combine(decompose_half(provider, text, **kw), decompose_fine(provider, text, **kw))


def sample_seeds(seed: int, k: int) -> list[int]:
    base = derive_seed(seed, "decompose")
    return [(base + i) % 2**32 for i in range(k)]


def decompose_k(provider, text: str, config: AgentConfig | None = None, *, seed: int = 0,
                prompt_dir=None) -> list[DecompositionSet]:
    """Draw ``config.k`` independent decompositions with distinct seed hints.

    Failed samples are dropped with a warning; the result keeps seed order.
    Raises DecompositionError only when no sample survives.
    """
    config = config or AgentConfig()
    _check_text(text)
    seeds = sample_seeds(seed, config.k)

    def one(s):
        try:
            return decompose(provider, text, temperature=config.temperature, seed=s,
                             max_retries=config.max_retries, prompt_dir=prompt_dir)
        except ProviderError as exc:
            return exc

    with ThreadPoolExecutor(max_workers=min(config.max_in_flight, config.k)) as pool:
        results = list(pool.map(one, seeds))
    survivors = [r for r in results if isinstance(r, DecompositionSet)]
    causes = [(s, r) for s, r in zip(seeds, results) if not isinstance(r, DecompositionSet)]
    for s, exc in causes:
        log.warning("decomposition sample with seed %d dropped: %s", s, exc)
    if not survivors:
        summary = "; ".join(f"seed {s}: {exc}" for s, exc in causes)
        raise DecompositionError(f"all {config.k} decomposition samples failed ({summary})",
                                 causes=[exc for _, exc in causes])
    return survivors
