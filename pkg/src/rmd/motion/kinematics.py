from __future__ import annotations

import numpy as np

from ..errors import InvalidArgumentError
from . import quaternion as quat
from .clip import MotionClip
from .skeleton import SkeletonDef


def global_rotations(clip: MotionClip, skeleton: SkeletonDef) -> np.ndarray:
    _check_joint_count(clip, skeleton)
    local = clip.joint_rotations
    out = np.empty_like(local)
    out[:, 0] = local[:, 0]
    for j in range(1, skeleton.joint_count):
        out[:, j] = quat.multiply(out[:, skeleton.parent_index[j]], local[:, j])
    return out


def forward_kinematics(clip: MotionClip, skeleton: SkeletonDef) -> np.ndarray:
    """World joint positions, shape (L, J, 3).

    The root sits at the clip's root translation; every other joint is its
    parent's position plus the parent's global rotation applied to the rest
    offset.
    """
    _check_joint_count(clip, skeleton)
    rots = global_rotations(clip, skeleton)
    pos = np.empty(clip.joint_rotations.shape[:2] + (3,))
    pos[:, 0] = clip.root_translation
    offsets = skeleton.rest_offsets
    for j in range(1, skeleton.joint_count):
        p = skeleton.parent_index[j]
        pos[:, j] = pos[:, p] + quat.rotate(rots[:, p], np.broadcast_to(offsets[j], (clip.length, 3)))
    return pos


def _check_joint_count(clip: MotionClip, skeleton: SkeletonDef):
    if clip.joint_count != skeleton.joint_count:
        raise InvalidArgumentError(
            f"clip has {clip.joint_count} joints, skeleton {skeleton.joint_count}"
        )
