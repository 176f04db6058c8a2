from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import InvalidArgumentError

DEFAULT_SKELETON = "skeleton_smpl22.json"
DEFAULT_FOOT_JOINTS = ("L_ankle", "L_foot", "R_ankle", "R_foot")


def _frozen(a, dtype=np.float64):
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SkeletonDef:
    """Fixed kinematic tree. Offsets are parent-local, in meters."""

    joint_names: tuple[str, ...]
    parent_index: tuple[int, ...]
    rest_offsets: np.ndarray
    foot_joints: tuple[str, ...] = DEFAULT_FOOT_JOINTS
    name: str = "custom"
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        names = tuple(self.joint_names)
        parents = tuple(int(p) for p in self.parent_index)
        offsets = _frozen(self.rest_offsets)
        if len(names) != len(parents) or offsets.shape != (len(names), 3):
            raise InvalidArgumentError(
                f"skeleton arrays disagree: {len(names)} names, {len(parents)} parents, "
                f"offsets {offsets.shape}"
            )
        if len(set(names)) != len(names):
            raise InvalidArgumentError("duplicate joint names in skeleton")
        if sum(p == -1 for p in parents) != 1 or parents[0] != -1:
            raise InvalidArgumentError("skeleton needs exactly one root, at index 0")
        for i, p in enumerate(parents[1:], start=1):
            if not 0 <= p < i:
                raise InvalidArgumentError(f"joint {i} has parent {p}; parents must precede children")
        if not np.all(np.isfinite(offsets)):
            raise InvalidArgumentError("rest offsets must be finite")
        object.__setattr__(self, "joint_names", names)
        object.__setattr__(self, "parent_index", parents)
        object.__setattr__(self, "rest_offsets", offsets)
        object.__setattr__(self, "foot_joints", tuple(self.foot_joints))
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})
        missing = [f for f in self.foot_joints if f not in self._index]
        if missing:
            raise InvalidArgumentError(f"foot joints not in skeleton: {missing}")

    @property
    def joint_count(self) -> int:
        return len(self.joint_names)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise InvalidArgumentError(f"unknown joint {name!r}") from None

    @property
    def foot_indices(self) -> tuple[int, ...]:
        return tuple(self.index(n) for n in self.foot_joints)

    def __eq__(self, other):
        if not isinstance(other, SkeletonDef):
            return NotImplemented
        return (
            self.joint_names == other.joint_names
            and self.parent_index == other.parent_index
            and np.array_equal(self.rest_offsets, other.rest_offsets)
        )

    __hash__ = None

    @classmethod
    def from_dict(cls, d: dict) -> "SkeletonDef":
        return cls(
            joint_names=d["joint_names"],
            parent_index=d["parent_index"],
            rest_offsets=d["rest_offsets"],
            foot_joints=d.get("foot_joints", DEFAULT_FOOT_JOINTS),
            name=d.get("name", "custom"),
        )


def load_skeleton(path=None) -> SkeletonDef:
    """Load a skeleton JSON file; ``None`` gives the bundled 22-joint skeleton."""
    if path is None:
        text = resources.files("rmd.data").joinpath(DEFAULT_SKELETON).read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return SkeletonDef.from_dict(json.loads(text))


def default_skeleton() -> SkeletonDef:
    return load_skeleton(None)
