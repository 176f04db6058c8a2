"""Procedural clips on the default skeleton, for tests and toy corpora."""
from __future__ import annotations

import numpy as np

from . import quaternion as quat
from .clip import MotionClip
from .skeleton import SkeletonDef, default_skeleton

PELVIS_HEIGHT = 0.93

UPPER_ACTIONS = ("wave_right", "raise_left", "clap", "swing", "cross")
LOWER_ACTIONS = ("walk", "circle", "stand", "jump")

_X = np.array([1.0, 0.0, 0.0])
_Y = np.array([0.0, 1.0, 0.0])
_Z = np.array([0.0, 0.0, 1.0])


def _rot(axis, angle):
    return quat.from_axis_angle(axis, np.asarray(angle, dtype=np.float64))


def identity_rotations(length: int, joints: int) -> np.ndarray:
    r = np.zeros((length, joints, 4))
    r[..., 0] = 1.0
    return r


def static_clip(length: int = 30, height: float = PELVIS_HEIGHT,
                skeleton: SkeletonDef | None = None, fps: float = 20.0) -> MotionClip:
    skeleton = skeleton or default_skeleton()
    trans = np.tile([0.0, height, 0.0], (length, 1))
    return MotionClip(fps, trans, identity_rotations(length, skeleton.joint_count))


def linear_walk(length: int = 40, speed: float = 0.05, heading: float = 0.0,
                height: float = PELVIS_HEIGHT, skeleton: SkeletonDef | None = None,
                fps: float = 20.0, gait: bool = False) -> MotionClip:
    """Root moves ``speed`` m/frame along a fixed heading."""
    skeleton = skeleton or default_skeleton()
    t = np.arange(length)
    direction = np.array([np.sin(heading), 0.0, np.cos(heading)])
    trans = np.tile([0.0, height, 0.0], (length, 1)) + speed * t[:, None] * direction
    rots = identity_rotations(length, skeleton.joint_count)
    rots[:, 0] = quat.yaw_quaternion(np.full(length, heading))
    if gait:
        _leg_gait(rots, skeleton, t)
    return MotionClip(fps, trans, rots)


def turning_walk(length: int = 60, speed: float = 0.04, turn_rate: float = 0.05,
                 heading0: float = 0.0, tilt: float = 0.0, height: float = PELVIS_HEIGHT,
                 skeleton: SkeletonDef | None = None, fps: float = 20.0) -> MotionClip:
    """Walk along an arc; ``tilt`` adds a pelvis pitch oscillation."""
    skeleton = skeleton or default_skeleton()
    t = np.arange(length)
    heading = heading0 + turn_rate * t
    trans = np.zeros((length, 3))
    steps = speed * np.stack([np.sin(heading), np.zeros(length), np.cos(heading)], axis=-1)
    trans[1:] = np.cumsum(steps[:-1], axis=0)
    trans[:, 1] = height + 0.02 * np.sin(0.4 * t)
    rots = identity_rotations(length, skeleton.joint_count)
    rots[:, 0] = quat.multiply(quat.yaw_quaternion(heading), _rot(_X, tilt * np.sin(0.3 * t)))
    _leg_gait(rots, skeleton, t)
    return MotionClip(fps, trans, rots)


def _leg_gait(rots, skeleton, t, amp=0.5):
    phase = 0.35 * t
    for side, sign in (("L", 1.0), ("R", -1.0)):
        rots[:, skeleton.index(f"{side}_hip")] = _rot(_X, sign * amp * np.sin(phase))
        rots[:, skeleton.index(f"{side}_knee")] = _rot(_X, 0.6 * amp * (1 + np.sin(phase + sign * 1.2)))


def action_clip(upper: str, lower: str, length: int, seed: int = 0,
                skeleton: SkeletonDef | None = None, fps: float = 20.0) -> MotionClip:
    """Combine one upper-body and one lower-body procedural action."""
    skeleton = skeleton or default_skeleton()
    rng = np.random.default_rng(seed)
    t = np.arange(length)
    phase = rng.uniform(0, 2 * np.pi)
    heading0 = rng.uniform(-np.pi, np.pi)

    if lower == "walk":
        base = linear_walk(length, speed=0.045, heading=heading0, skeleton=skeleton, fps=fps, gait=True)
    elif lower == "circle":
        base = turning_walk(length, speed=0.04, turn_rate=2 * np.pi / length, heading0=heading0,
                            tilt=0.05, skeleton=skeleton, fps=fps)
    elif lower == "stand":
        base = static_clip(length, skeleton=skeleton, fps=fps)
    elif lower == "jump":
        base = static_clip(length, skeleton=skeleton, fps=fps)
    else:
        raise ValueError(f"unknown lower action {lower!r}")
    trans = base.root_translation.copy()
    rots = base.joint_rotations.copy()
    if lower == "stand":
        rots[:, 0] = quat.yaw_quaternion(np.full(length, heading0))
    if lower == "jump":
        hop = np.clip(np.sin(2 * np.pi * t / max(length - 1, 1) * 2 + phase), 0, None)
        trans[:, 1] += 0.3 * hop
        for side in ("L", "R"):
            rots[:, skeleton.index(f"{side}_knee")] = _rot(_X, 0.8 * (1 - hop))
        rots[:, 0] = quat.multiply(quat.yaw_quaternion(np.full(length, heading0)), _rot(_X, 0.1 * hop))

    osc = np.sin(0.3 * t + phase)
    if upper == "wave_right":
        rots[:, skeleton.index("R_shoulder")] = _rot(_Z, np.full(length, -1.9))
        rots[:, skeleton.index("R_elbow")] = _rot(_Y, 0.6 * osc)
    elif upper == "raise_left":
        rots[:, skeleton.index("L_shoulder")] = _rot(_Z, 1.2 + 0.6 * (1 + osc) / 2)
    elif upper == "clap":
        for side, sign in (("L", 1.0), ("R", -1.0)):
            rots[:, skeleton.index(f"{side}_shoulder")] = _rot(_Y, sign * -1.2 * np.ones(length))
            rots[:, skeleton.index(f"{side}_elbow")] = _rot(_Y, sign * -(0.4 + 0.4 * osc))
    elif upper == "swing":
        for side, sign in (("L", 1.0), ("R", -1.0)):
            rots[:, skeleton.index(f"{side}_shoulder")] = _rot(_X, sign * 0.5 * osc)
    elif upper == "cross":
        for side, sign in (("L", 1.0), ("R", -1.0)):
            rots[:, skeleton.index(f"{side}_shoulder")] = _rot(_Y, sign * -1.0 * np.ones(length))
            rots[:, skeleton.index(f"{side}_elbow")] = _rot(_Y, sign * -1.6 * np.ones(length))
        rots[:, skeleton.index("head")] = _rot(_X, 0.2 * osc)
    else:
        raise ValueError(f"unknown upper action {upper!r}")
    rots[:, skeleton.index("spine2")] = _rot(_Y, 0.05 * osc)
    return MotionClip(fps, trans, rots)
