from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgumentError
from . import quaternion as quat

# per-quaternion; untouched quaternions keep their exact bits
_RENORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MotionClip:
    """Root translation (L, 3) plus parent-local joint rotations (L, J, 4), wxyz.

    Arrays are copied and frozen on construction. Quaternions are
    renormalized; anything further than 1e-3 from unit norm is rejected
    as corrupt rather than silently fixed.
    """

    fps: float
    root_translation: np.ndarray
    joint_rotations: np.ndarray

    def __post_init__(self):
        trans = np.array(self.root_translation, dtype=np.float64)
        rots = np.array(self.joint_rotations, dtype=np.float64)
        if trans.ndim != 2 or trans.shape[1] != 3:
            raise InvalidArgumentError(f"root_translation must be (L, 3), got {trans.shape}")
        if rots.ndim != 3 or rots.shape[2] != 4 or rots.shape[0] != trans.shape[0]:
            raise InvalidArgumentError(
                f"joint_rotations must be (L, J, 4) with L={trans.shape[0]}, got {rots.shape}"
            )
        if trans.shape[0] < 1:
            raise InvalidArgumentError("a clip needs at least one frame")
        if not (np.all(np.isfinite(trans)) and np.all(np.isfinite(rots))):
            raise InvalidArgumentError("clip contains non-finite values")
        if not float(self.fps) > 0:
            raise InvalidArgumentError(f"fps must be positive, got {self.fps}")
        norms = np.linalg.norm(rots, axis=-1)
        if np.any(np.abs(norms - 1.0) > 1e-3):
            raise InvalidArgumentError("joint rotations are not unit quaternions")
        drift = np.abs(norms - 1.0) > _RENORM_TOL
        if np.any(drift):
            rots[drift] = rots[drift] / norms[drift][:, None]
        trans.flags.writeable = False
        rots.flags.writeable = False
        object.__setattr__(self, "fps", float(self.fps))
        object.__setattr__(self, "root_translation", trans)
        object.__setattr__(self, "joint_rotations", rots)

    @property
    def length(self) -> int:
        return self.root_translation.shape[0]

    @property
    def joint_count(self) -> int:
        return self.joint_rotations.shape[1]

    def __len__(self):
        return self.length

    def __eq__(self, other):
        if not isinstance(other, MotionClip):
            return NotImplemented
        return (
            self.fps == other.fps
            and np.array_equal(self.root_translation, other.root_translation)
            and np.array_equal(self.joint_rotations, other.joint_rotations)
        )

    __hash__ = None


def resample_clip(clip: MotionClip, target_len: int) -> MotionClip:
    """Uniform time remap to ``target_len`` frames.

    Rotations use slerp, translation linear interpolation. First and last
    frames are copied exactly; a frame whose remapped time lands on an
    integer is copied bit-for-bit.
    """
    target_len = int(target_len)
    if target_len < 1:
        raise InvalidArgumentError(f"target_len must be >= 1, got {target_len}")
    n = clip.length
    if target_len == 1 or n == 1:
        idx = np.zeros(target_len, dtype=int)
        return MotionClip(clip.fps, clip.root_translation[idx], clip.joint_rotations[idx])

    u = np.arange(target_len) * (n - 1) / (target_len - 1)
    i0 = np.minimum(np.floor(u).astype(int), n - 1)
    i1 = np.minimum(i0 + 1, n - 1)
    frac = u - i0

    trans0 = clip.root_translation[i0]
    trans1 = clip.root_translation[i1]
    trans = trans0 + frac[:, None] * (trans1 - trans0)

    r0 = clip.joint_rotations[i0]
    r1 = clip.joint_rotations[i1]
    rots = quat.slerp(r0, r1, np.broadcast_to(frac[:, None], r0.shape[:2]))

    exact = frac == 0.0
    trans[exact] = trans0[exact]
    rots[exact] = r0[exact]
    return MotionClip(clip.fps, trans, rots)
