"""Body-part masks and recomposition of retrieved clips into one motion."""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from ..errors import InvalidArgumentError
from .clip import MotionClip, resample_clip
from .skeleton import SkeletonDef

DEFAULT_MASKS = "masks_smpl22.json"

LEVEL_PARTS = {
    "full": ("full",),
    "half": ("upper", "lower"),
    "fine": ("head", "torso", "left_arm", "right_arm", "lower_body", "trajectory"),
}
MASK_NAMES = {"head", "torso", "left_arm", "right_arm", "lower_body", "trajectory", "upper_body", "full"}


@dataclass(frozen=True)
class BodyPartMask:
    part: str
    joint_indices: frozenset
    carries_translation: bool = False
    carries_root_rotation: bool = False


class MaskSet:
    """Per-level part masks for one skeleton, validated as exact partitions."""

    def __init__(self, levels: Mapping[str, Mapping[str, BodyPartMask]], skeleton: SkeletonDef):
        self.skeleton = skeleton
        self.levels = {lvl: dict(parts) for lvl, parts in levels.items()}
        for lvl, parts in self.levels.items():
            check_partition(parts, skeleton, lvl)

    def __getitem__(self, level: str) -> dict:
        try:
            return self.levels[level]
        except KeyError:
            raise InvalidArgumentError(f"no masks for level {level!r}") from None

    @classmethod
    def from_dict(cls, d: dict, skeleton: SkeletonDef, fine_root_rotation: str = "trajectory"):
        levels = {}
        for lvl, parts in d["levels"].items():
            levels[lvl] = {}
            for key, spec in parts.items():
                levels[lvl][key] = BodyPartMask(
                    part=spec.get("mask", key),
                    joint_indices=frozenset(skeleton.index(n) for n in spec["joints"]),
                    carries_translation=bool(spec.get("translation", False)),
                    carries_root_rotation=bool(spec.get("root_rotation", False)),
                )
        if "fine" in levels and fine_root_rotation != "trajectory":
            fine = levels["fine"]
            if fine_root_rotation not in fine:
                raise InvalidArgumentError(f"unknown fine part {fine_root_rotation!r} for root rotation")
            for key, m in fine.items():
                fine[key] = BodyPartMask(m.part, m.joint_indices, m.carries_translation,
                                         key == fine_root_rotation)
        return cls(levels, skeleton)


def load_masks(path=None, skeleton: SkeletonDef | None = None,
               fine_root_rotation: str = "trajectory") -> MaskSet:
    from .skeleton import default_skeleton

    skeleton = skeleton or default_skeleton()
    if path is None:
        text = resources.files("rmd.data").joinpath(DEFAULT_MASKS).read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return MaskSet.from_dict(json.loads(text), skeleton, fine_root_rotation)


def check_partition(parts: Mapping[str, BodyPartMask], skeleton: SkeletonDef, level: str = ""):
    """Every non-root joint, the translation and the root rotation owned exactly once."""
    owner: dict[int, str] = {}
    for key, m in parts.items():
        for j in m.joint_indices:
            if j == 0 or not 0 < j < skeleton.joint_count:
                raise InvalidArgumentError(f"{level}/{key}: joint index {j} is not a non-root joint")
            if j in owner:
                raise InvalidArgumentError(
                    f"{level}: joint {skeleton.joint_names[j]} in both {owner[j]} and {key}"
                )
            owner[j] = key
    missing = sorted(set(range(1, skeleton.joint_count)) - set(owner))
    if missing:
        names = [skeleton.joint_names[j] for j in missing]
        raise InvalidArgumentError(f"{level}: joints not covered by any part: {names}")
    for flag in ("carries_translation", "carries_root_rotation"):
        holders = [k for k, m in parts.items() if getattr(m, flag)]
        if len(holders) != 1:
            raise InvalidArgumentError(f"{level}: {flag} must belong to exactly one part, got {holders}")


def compose_parts(selections: Mapping[str, MotionClip], target_len: int,
                  skeleton: SkeletonDef, masks: MaskSet | Mapping[str, BodyPartMask],
                  level: str | None = None) -> MotionClip:
    """Resample every selected clip to ``target_len`` and copy channels by mask.

    ``selections`` maps part keys of one level (see ``LEVEL_PARTS``) to clips.
    Translation and root rotation come from whichever part carries them.
    """
    keys = set(selections)
    if level is None:
        matches = [lvl for lvl, parts in LEVEL_PARTS.items() if set(parts) == keys]
        if not matches:
            raise InvalidArgumentError(f"selection keys {sorted(keys)} match no level")
        level = matches[0]
    parts = masks[level] if isinstance(masks, MaskSet) else dict(masks)
    missing = set(parts) - keys
    extra = keys - set(parts)
    if missing or extra:
        raise InvalidArgumentError(f"{level}: missing parts {sorted(missing)}, unknown parts {sorted(extra)}")
    check_partition(parts, skeleton, level)

    fps = None
    resampled = {}
    for key in sorted(parts):
        clip = selections[key]
        if clip.joint_count != skeleton.joint_count:
            raise InvalidArgumentError(f"part {key}: clip has {clip.joint_count} joints")
        resampled[key] = resample_clip(clip, target_len)
        if parts[key].carries_translation:
            fps = clip.fps

    L = int(target_len)
    trans = np.empty((L, 3))
    rots = np.empty((L, skeleton.joint_count, 4))
    for key, m in parts.items():
        src = resampled[key]
        idx = sorted(m.joint_indices)
        rots[:, idx] = src.joint_rotations[:, idx]
        if m.carries_translation:
            trans[:] = src.root_translation
        if m.carries_root_rotation:
            rots[:, 0] = src.joint_rotations[:, 0]
    return MotionClip(fps, trans, rots)
