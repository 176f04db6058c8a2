"""Conversion between motion clips and the 263-dim rotation-invariant pose features.

Per-frame layout for a J-joint skeleton::

    [0]                   r_va   yaw change to the next frame (rad/frame)
    [1:3]                 r_vx, r_vz  root XZ velocity in the current heading frame
    [3]                   r_h    root height
    [4 : 4+3(J-1)]        j_p    non-root joint positions, root-XZ-relative, de-yawed
    next 6(J-1)           j_r    6D local rotations of non-root joints
    next 3J               j_v    joint velocities, de-yawed
    last 4                foot contacts (L_ankle, L_foot, R_ankle, R_foot)

Velocity-type channels on the final frame repeat the previous frame, so a
clip of L frames maps to L feature rows.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgumentError
from . import quaternion as quat
from .clip import MotionClip
from .kinematics import forward_kinematics
from .skeleton import SkeletonDef

CONTACT_THRESHOLD = 2e-3
N_CONTACTS = 4


@dataclass(frozen=True)
class FeatureLayout:
    joint_count: int

    @property
    def width(self) -> int:
        j = self.joint_count
        return 4 + (j - 1) * 3 + (j - 1) * 6 + j * 3 + N_CONTACTS

    @property
    def root(self) -> slice:
        return slice(0, 4)

    @property
    def positions(self) -> slice:
        return slice(4, 4 + (self.joint_count - 1) * 3)

    @property
    def rotations(self) -> slice:
        start = self.positions.stop
        return slice(start, start + (self.joint_count - 1) * 6)

    @property
    def velocities(self) -> slice:
        start = self.rotations.stop
        return slice(start, start + self.joint_count * 3)

    @property
    def contacts(self) -> slice:
        start = self.velocities.stop
        return slice(start, start + N_CONTACTS)


def feature_dim(skeleton: SkeletonDef) -> int:
    return FeatureLayout(skeleton.joint_count).width


def _wrap(angle):
    return (angle + np.pi) % (2.0 * np.pi) - np.pi


def _pad_last(a):
    return np.concatenate([a, a[-1:]], axis=0)


def root_origin(clip: MotionClip) -> tuple[float, float, float]:
    """(heading, x, z) of the first frame; features drop these, so keep them to re-anchor."""
    heading = float(quat.heading_angle(clip.joint_rotations[0, 0]))
    x, _, z = clip.root_translation[0]
    return heading, float(x), float(z)


def to_pose_features(clip: MotionClip, skeleton: SkeletonDef,
                     contact_threshold: float = CONTACT_THRESHOLD) -> np.ndarray:
    if clip.length < 2:
        raise InvalidArgumentError("pose features need at least 2 frames")
    layout = FeatureLayout(skeleton.joint_count)
    L = clip.length
    pos = forward_kinematics(clip, skeleton)
    root = clip.root_translation

    yaw = quat.heading_angle(clip.joint_rotations[:, 0])
    inv_yaw = quat.yaw_quaternion(-yaw)

    r_va = _pad_last(_wrap(yaw[1:] - yaw[:-1]))
    root_vel = quat.rotate(inv_yaw[:-1], root[1:] - root[:-1])
    root_vel = _pad_last(root_vel)

    centered = pos - np.stack([root[:, 0], np.zeros(L), root[:, 2]], axis=-1)[:, None, :]
    local_pos = quat.rotate(inv_yaw[:, None, :], centered)

    dpos = pos[1:] - pos[:-1]
    local_vel = _pad_last(quat.rotate(inv_yaw[:-1, None, :], dpos))

    rot6d = quat.to_6d(clip.joint_rotations[:, 1:])

    feet = np.asarray(skeleton.foot_indices)
    speed2 = np.sum(dpos[:, feet] ** 2, axis=-1)
    contacts = _pad_last((speed2 < contact_threshold).astype(np.float64))

    out = np.empty((L, layout.width))
    out[:, 0] = r_va
    out[:, 1] = root_vel[:, 0]
    out[:, 2] = root_vel[:, 2]
    out[:, 3] = root[:, 1]
    out[:, layout.positions] = local_pos[:, 1:].reshape(L, -1)
    out[:, layout.rotations] = rot6d.reshape(L, -1)
    out[:, layout.velocities] = local_vel.reshape(L, -1)
    out[:, layout.contacts] = contacts
    return out


def _kabsch(src, dst):
    """Rotation R minimising sum |R src_i - dst_i|^2; rows are points."""
    h = src.T @ dst
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T)) or 1.0
    return vt.T @ np.diag([1.0, 1.0, d]) @ u.T


def _root_tilt(local_pos, r_h, skeleton: SkeletonDef):
    """Recover the de-yawed root rotation from the root's children positions."""
    children = [j for j, p in enumerate(skeleton.parent_index) if p == 0]
    src = skeleton.rest_offsets[children]
    L = local_pos.shape[0]
    if len(children) < 2 or np.linalg.matrix_rank(src, tol=1e-9) < 2:
        return np.tile(quat.IDENTITY, (L, 1))
    mats = np.empty((L, 3, 3))
    for t in range(L):
        dst = local_pos[t, np.asarray(children) - 1] - np.array([0.0, r_h[t], 0.0])
        mats[t] = _kabsch(src, dst)
    return quat.from_matrix(mats)


def from_pose_features(features, skeleton: SkeletonDef, fps: float = 20.0,
                       origin: tuple[float, float, float] = (0.0, 0.0, 0.0)) -> MotionClip:
    """Rebuild an animatable clip from pose features.

    Heading and XZ position are integrated from the root velocities starting
    at ``origin`` = (heading, x, z). Non-root rotations decode from the 6D
    blocks; the root's tilt is fitted to its children's positions.
    """
    f = np.asarray(features, dtype=np.float64)
    layout = FeatureLayout(skeleton.joint_count)
    if f.ndim != 2 or f.shape[1] != layout.width:
        raise InvalidArgumentError(f"expected (L, {layout.width}) features, got {f.shape}")
    if f.shape[0] < 1 or not np.all(np.isfinite(f)):
        raise InvalidArgumentError("features must be non-empty and finite")
    L = f.shape[0]
    J = skeleton.joint_count
    heading0, x0, z0 = origin

    yaw = np.empty(L)
    yaw[0] = heading0
    yaw[1:] = heading0 + np.cumsum(f[:-1, 0])
    yaw_q = quat.yaw_quaternion(yaw)

    step = np.zeros((L - 1, 3))
    step[:, 0] = f[:-1, 1]
    step[:, 2] = f[:-1, 2]
    world_step = quat.rotate(yaw_q[:-1], step)
    root = np.zeros((L, 3))
    root[0] = [x0, 0.0, z0]
    root[1:, [0, 2]] = root[0, [0, 2]] + np.cumsum(world_step[:, [0, 2]], axis=0)
    root[:, 1] = f[:, 3]

    rot6d = f[:, layout.rotations].reshape(L, J - 1, 6)
    rots = np.empty((L, J, 4))
    rots[:, 1:] = quat.from_6d(rot6d)

    local_pos = f[:, layout.positions].reshape(L, J - 1, 3)
    tilt = _root_tilt(local_pos, f[:, 3], skeleton)
    rots[:, 0] = quat.canonicalize(quat.multiply(yaw_q, tilt))
    return MotionClip(fps, root, rots)
