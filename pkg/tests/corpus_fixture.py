"""Twenty-motion fixture corpus with canned LLM replies.

Each motion combines one procedural upper-body action with one lower-body
action. Captions and their decompositions are written from per-action
phrase tables, so the fixture LLM can answer every decomposition prompt.
Three query scenarios land on the full, half and fine levels under the
default thresholds with the stub embedder.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from rmd.agents import FixtureLLM, render_fine, render_half
from rmd.corpus import INFORM_LINE
from rmd.motion import default_skeleton, save_motion
from rmd.motion import synthetic

UPPER = {
    "wave_right": ("waves the right arm overhead", "Right arm waves overhead in wide arcs.",
                   "Left arm hangs relaxed.", "Right arm sweeps back and forth above the head."),
    "raise_left": ("holds the left hand up high", "Left arm lifts and stays above the head.",
                   "Left arm is raised above the head.", "Right arm hangs relaxed."),
    "clap": ("claps both hands", "Both hands meet repeatedly in front of the chest.",
             "Left hand claps toward the center.", "Right hand claps toward the center."),
    "swing": ("lets both arms swing", "Arms swing loosely back and forth.",
              "Left arm swings forward and back.", "Right arm swings opposite the left."),
    "cross": ("folds both arms", "Arms fold across the chest.",
              "Left forearm rests across the chest.", "Right forearm rests over the left."),
}
LOWER = {
    "walk": ("walking straight ahead", "Legs stride forward in a straight line.",
             "Left leg steps forward.", "Right leg steps forward.", "Moves forward along a straight line."),
    "circle": ("walking around a circle", "Feet step steadily around a circular path.",
               "Left leg steps along a curve.", "Right leg crosses along the curve.",
               "Travels around a closed circular loop."),
    "stand": ("standing still", "Legs stay planted with weight balanced.",
              "Left leg stays planted.", "Right leg stays planted.", "Remains in place without travel."),
    "jump": ("hopping in place", "Legs bend and push off into small hops.",
             "Left leg bends and extends.", "Right leg bends and extends.", "Bounces up and down in place."),
}
HEAD = {"wave_right": "Head turns toward the waving hand.", "raise_left": "Head looks up at the raised hand.",
        "clap": "Head nods with the claps.", "swing": "Head stays level.", "cross": "Head tilts slightly down."}
TORSO = {"walk": "Spine leans gently forward.", "circle": "Spine twists into the turn.",
         "stand": "Spine stays upright.", "jump": "Spine compresses and extends with each hop."}

# two captions on these entries exercise the multi-text path
MULTI_TEXT = {3, 12}


def caption(u: str, l: str) -> str:
    return f"A person {UPPER[u][0]} while {LOWER[l][0]}."


def half_reply(u: str, l: str) -> str:
    return f"{UPPER[u][1]}\n{LOWER[l][1]}"


def fine_reply(u: str, l: str) -> str:
    return "\n".join([HEAD[u], TORSO[l], UPPER[u][2], UPPER[u][3], LOWER[l][2], LOWER[l][3], LOWER[l][4]])


@dataclass
class FixtureCorpus:
    root: Path
    motion_dir: Path
    annotations: Path
    llm_path: Path
    score_model: Path
    llm: FixtureLLM
    records: list
    queries: dict

    def fresh_llm(self) -> FixtureLLM:
        return FixtureLLM.from_file(self.llm_path)


# query scenarios: prompt, length, expected level
FULL_QUERY_INDEX = 5
HALF_PROMPT = "Someone keeps an arm raised toward the sky and steps in a loop."
FINE_PROMPT = "A dancer spins slowly with arms stretched wide."
HALF_DECOMP = ("Left arm lifts and stays above the head.\nFeet step steadily around a circular path.")
FINE_DECOMP_HALF = "Arms stretch out to both sides.\nFeet pivot on the spot."
FINE_DECOMP_FINE = "\n".join([
    "Head tips back gently.", "Spine rotates smoothly.", "Left arm extends outward.", "Right arm extends outward.",
    "Left foot pivots.", "Right foot pushes around.", "Rotates on the spot."])


def build(root) -> FixtureCorpus:
    root = Path(root)
    motion_dir = root / "motions"
    motion_dir.mkdir(parents=True, exist_ok=True)
    sk = default_skeleton()
    llm = FixtureLLM(default="1")
    records = []
    combos = [(u, l) for u in synthetic.UPPER_ACTIONS for l in synthetic.LOWER_ACTIONS]
    for i, (u, l) in enumerate(combos):
        length = 40 + 2 * i
        name = f"m{i:02d}.json"
        save_motion(motion_dir / name, synthetic.action_clip(u, l, length, seed=i), sk)
        texts = [caption(u, l)]
        if i in MULTI_TEXT:
            texts.append(f"Somebody {UPPER[u][0]}, {LOWER[l][0]}.")
        records.append({"id": f"m{i:02d}", "motion": name, "texts": texts})
        text = texts[0] if len(texts) == 1 else INFORM_LINE + "\n" + "\n".join(texts)
        llm.add(render_half(text), half_reply(u, l))
        llm.add(render_fine(text), fine_reply(u, l))
    llm.add(render_half(HALF_PROMPT), HALF_DECOMP)
    llm.add(render_fine(HALF_PROMPT), fine_reply("raise_left", "circle"))
    llm.add(render_half(FINE_PROMPT), FINE_DECOMP_HALF)
    llm.add(render_fine(FINE_PROMPT), FINE_DECOMP_FINE)

    annotations = root / "annotations.jsonl"
    annotations.write_text("".join(json.dumps(r) + "\n" for r in records), "utf-8")
    llm_path = root / "llm_fixture.json"
    llm.save(llm_path)
    score_model = root / "score_model.json"
    score_model.write_text(json.dumps({"kind": "gaussian", "mean": 0.0, "var": 1.0}), "utf-8")
    full = records[FULL_QUERY_INDEX]
    queries = {
        "full": (full["texts"][0], 40 + 2 * FULL_QUERY_INDEX),
        "half": (HALF_PROMPT, 60),
        "fine": (FINE_PROMPT, 60),
    }
    return FixtureCorpus(root, motion_dir, annotations, llm_path, score_model, llm, records, queries)
