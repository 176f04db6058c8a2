"""Skeleton-aware motion data model: quaternions, resampling, FK, features, composition."""
from .clip import MotionClip, resample_clip
from .compose import LEVEL_PARTS, BodyPartMask, MaskSet, check_partition, compose_parts, load_masks
from .features import (
    CONTACT_THRESHOLD,
    FeatureLayout,
    feature_dim,
    from_pose_features,
    root_origin,
    to_pose_features,
)
from .io import load_features, load_motion, save_features, save_motion
from .kinematics import forward_kinematics, global_rotations
from .quaternion import from_6d as sixd_to_quat
from .quaternion import slerp
from .quaternion import to_6d as quat_to_6d
from .skeleton import SkeletonDef, default_skeleton, load_skeleton

__all__ = [
    "BodyPartMask",
    "CONTACT_THRESHOLD",
    "FeatureLayout",
    "LEVEL_PARTS",
    "MaskSet",
    "MotionClip",
    "SkeletonDef",
    "check_partition",
    "compose_parts",
    "default_skeleton",
    "feature_dim",
    "forward_kinematics",
    "from_pose_features",
    "global_rotations",
    "load_features",
    "load_masks",
    "load_motion",
    "load_skeleton",
    "quat_to_6d",
    "resample_clip",
    "root_origin",
    "save_features",
    "save_motion",
    "sixd_to_quat",
    "slerp",
    "to_pose_features",
]
