"""Prompt templates for the decomposition and retrieval agents.

Templates ship as text files; slots are literal bracketed names such as
``[description]``.
"""
from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources
from pathlib import Path

TEMPLATE_FILES = {
    "half": "half_body.txt",
    "fine": "fine_grained.txt",
    "retrieval": "retrieval_agent.txt",
}

PART_PHRASES = {
    "full": "full body",
    "upper": "upper body",
    "lower": "lower body",
    "head": "head",
    "torso": "torso",
    "left_arm": "left arm",
    "right_arm": "right arm",
    "lower_body": "lower body",
    "trajectory": "trajectory",
}


@lru_cache(maxsize=None)
def _read(name: str, directory: str | None) -> str:
    if directory is None:
        text = resources.files("rmd.data").joinpath("prompts", name).read_text("utf-8")
    else:
        text = (Path(directory) / name).read_text("utf-8")
    return text[:-1] if text.endswith("\n") else text


def template(kind: str, directory=None) -> str:
    return _read(TEMPLATE_FILES[kind], None if directory is None else str(directory))


def fill(text: str, slots: dict) -> str:
    """Substitute ``[slot]`` markers in one pass; unknown brackets stay as-is."""
    pattern = re.compile("|".join(re.escape(f"[{k}]") for k in slots))
    return pattern.sub(lambda m: slots[m.group(0)[1:-1]], text)


def render_half(description: str, directory=None) -> str:
    return fill(template("half", directory), {"description": description})


def render_fine(description: str, directory=None) -> str:
    return fill(template("fine", directory), {"description": description})


def render_retrieval(part: str, original_prompt: str, candidates, directory=None) -> str:
    listing = "\n".join(f"{i}. {text}" for i, text in enumerate(candidates, start=1))
    return fill(template("retrieval", directory), {
        "retrieved motion prompts": listing,
        "part": PART_PHRASES.get(part, part.replace("_", " ")),
        "original motion prompt": original_prompt,
    })
