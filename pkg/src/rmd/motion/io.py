"""JSON motion and feature files.

Floats are written with Python's shortest round-trip repr, so a
write/read cycle reproduces every value bit-for-bit.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import InvalidArgumentError
from .clip import MotionClip
from .skeleton import SkeletonDef

SCHEMA_VERSION = 1


def _dump(obj, path):
    Path(path).write_text(json.dumps(obj, separators=(",", ":")) + "\n", encoding="utf-8")


def _load(path) -> dict:
    path = Path(path)
    try:
        d = json.loads(path.read_text("utf-8"))
    except (OSError, ValueError) as e:
        raise InvalidArgumentError(f"cannot read {path}: {e}") from e
    if not isinstance(d, dict) or d.get("schema_version") != SCHEMA_VERSION:
        raise InvalidArgumentError(
            f"{path}: unsupported schema_version {d.get('schema_version') if isinstance(d, dict) else None}"
        )
    return d


def motion_to_dict(clip: MotionClip, skeleton: SkeletonDef) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "fps": clip.fps,
        "joint_names": list(skeleton.joint_names),
        "parent_index": list(skeleton.parent_index),
        "rest_offsets": skeleton.rest_offsets.tolist(),
        "root_translation": clip.root_translation.tolist(),
        "joint_rotations": clip.joint_rotations.tolist(),
    }


def save_motion(path, clip: MotionClip, skeleton: SkeletonDef) -> None:
    if clip.joint_count != skeleton.joint_count:
        raise InvalidArgumentError("clip and skeleton joint counts differ")
    _dump(motion_to_dict(clip, skeleton), path)


def load_motion(path) -> tuple[MotionClip, SkeletonDef]:
    d = _load(path)
    try:
        skeleton = SkeletonDef(d["joint_names"], d["parent_index"], d["rest_offsets"])
        clip = MotionClip(d["fps"], d["root_translation"], d["joint_rotations"])
    except KeyError as e:
        raise InvalidArgumentError(f"{path}: missing field {e}") from None
    if clip.joint_count != skeleton.joint_count:
        raise InvalidArgumentError(f"{path}: rotations have {clip.joint_count} joints, skeleton {skeleton.joint_count}")
    return clip, skeleton


def save_features(path, features) -> None:
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 2:
        raise InvalidArgumentError(f"features must be 2-D, got shape {f.shape}")
    _dump({"schema_version": SCHEMA_VERSION, "feature_dim": f.shape[1], "frames": f.tolist()}, path)


def load_features(path) -> np.ndarray:
    d = _load(path)
    frames = np.asarray(d.get("frames"), dtype=np.float64)
    dim = d.get("feature_dim")
    if frames.ndim != 2 or frames.shape[1] != dim:
        raise InvalidArgumentError(f"{path}: frames shape {frames.shape} disagrees with feature_dim {dim}")
    return frames
