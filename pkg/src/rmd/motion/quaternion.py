"""Quaternion helpers on numpy arrays of shape (..., 4), component order (w, x, y, z)."""
from __future__ import annotations

import numpy as np

from ..errors import InvalidArgumentError

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])

# below this |dot| gap slerp degrades to normalized lerp (sin(theta) ~ 0)
_SLERP_LINEAR_GAP = 1e-7


def normalize(q):
    q = np.asarray(q, dtype=np.float64)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(n < 1e-12):
        raise InvalidArgumentError("cannot normalize a zero quaternion")
    return q / n


def canonicalize(q):
    """Flip sign so that w >= 0 (q and -q are the same rotation)."""
    q = np.asarray(q, dtype=np.float64)
    return np.where(q[..., :1] < 0.0, -q, q)


def conjugate(q):
    q = np.asarray(q, dtype=np.float64)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def multiply(a, b):
    """Hamilton product a * b (apply b first, then a)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    aw, ax, ay, az = np.moveaxis(a, -1, 0)
    bw, bx, by, bz = np.moveaxis(b, -1, 0)
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def rotate(q, v):
    """Rotate vectors v (..., 3) by unit quaternions q (..., 4)."""
    q = np.asarray(q, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    u = q[..., 1:]
    uv = np.cross(u, v)
    uuv = np.cross(u, uv)
    return v + 2.0 * (q[..., :1] * uv + uuv)


def from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis, axis=-1, keepdims=True)
    half = 0.5 * np.asarray(angle, dtype=np.float64)[..., None]
    return np.concatenate([np.cos(half), np.sin(half) * axis], axis=-1)


def yaw_quaternion(angle):
    """Rotation by ``angle`` radians about +Y."""
    angle = np.asarray(angle, dtype=np.float64)
    half = 0.5 * angle
    zero = np.zeros_like(half)
    return np.stack([np.cos(half), zero, np.sin(half), zero], axis=-1)


def angle_between(a, b):
    """Geodesic angle in radians between rotations a and b."""
    d = multiply(conjugate(normalize(a)), normalize(b))
    return 2.0 * np.arctan2(np.linalg.norm(d[..., 1:], axis=-1), np.abs(d[..., 0]))


def to_matrix(q):
    q = normalize(q)
    w, x, y, z = np.moveaxis(q, -1, 0)
    m = np.stack(
        [
            1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
            2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
            2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y),
        ],
        axis=-1,
    )
    return m.reshape(q.shape[:-1] + (3, 3))


def from_matrix(m):
    """Rotation matrix (..., 3, 3) to canonical quaternion (Shepperd's method)."""
    m = np.asarray(m, dtype=np.float64)
    batch = m.shape[:-2]
    m = m.reshape(-1, 3, 3)
    r00, r01, r02 = m[:, 0, 0], m[:, 0, 1], m[:, 0, 2]
    r10, r11, r12 = m[:, 1, 0], m[:, 1, 1], m[:, 1, 2]
    r20, r21, r22 = m[:, 2, 0], m[:, 2, 1], m[:, 2, 2]
    tr = r00 + r11 + r22
    choice = np.argmax(np.stack([tr, r00, r11, r22], axis=1), axis=1)

    with np.errstate(divide="ignore", invalid="ignore"):
        s0 = 2.0 * np.sqrt(np.maximum(1.0 + tr, 0.0))
        s1 = 2.0 * np.sqrt(np.maximum(1.0 + r00 - r11 - r22, 0.0))
        s2 = 2.0 * np.sqrt(np.maximum(1.0 - r00 + r11 - r22, 0.0))
        s3 = 2.0 * np.sqrt(np.maximum(1.0 - r00 - r11 + r22, 0.0))
        cands = np.stack(
            [
                np.stack([0.25 * s0, (r21 - r12) / s0, (r02 - r20) / s0, (r10 - r01) / s0], -1),
                np.stack([(r21 - r12) / s1, 0.25 * s1, (r01 + r10) / s1, (r02 + r20) / s1], -1),
                np.stack([(r02 - r20) / s2, (r01 + r10) / s2, 0.25 * s2, (r12 + r21) / s2], -1),
                np.stack([(r10 - r01) / s3, (r02 + r20) / s3, (r12 + r21) / s3, 0.25 * s3], -1),
            ],
            axis=1,
        )
    out = cands[np.arange(m.shape[0]), choice]
    return canonicalize(normalize(out)).reshape(batch + (4,))


def slerp(q0, q1, u):
    """Spherical linear interpolation along the shortest arc.

    Broadcasts over leading dimensions; ``u`` may be a scalar or an array
    broadcastable against ``q0[..., 0]``.
    """
    q0 = normalize(q0)
    q1 = normalize(q1)
    u = np.asarray(u, dtype=np.float64)[..., None]
    dot = np.sum(q0 * q1, axis=-1, keepdims=True)
    q1 = np.where(dot < 0.0, -q1, q1)
    dot = np.abs(dot)

    linear = dot > 1.0 - _SLERP_LINEAR_GAP
    theta = np.arccos(np.clip(dot, -1.0, 1.0))
    sin_theta = np.sin(theta)
    safe = np.where(linear, 1.0, sin_theta)
    w0 = np.where(linear, 1.0 - u, np.sin((1.0 - u) * theta) / safe)
    w1 = np.where(linear, u, np.sin(u * theta) / safe)
    out = w0 * q0 + w1 * q1
    return np.where(linear, normalize(out), out)


def heading_angle(q):
    """Yaw of the rotated +Z axis projected on the XZ plane, in radians."""
    fwd = rotate(q, np.broadcast_to([0.0, 0.0, 1.0], np.shape(q)[:-1] + (3,)))
    return np.arctan2(fwd[..., 0], fwd[..., 2])


def to_6d(q):
    """First two rotation-matrix columns, flattened column-major: (c0, c1)."""
    m = to_matrix(q)
    return np.concatenate([m[..., :, 0], m[..., :, 1]], axis=-1)


def matrix_from_6d(v, eps: float = 1e-8):
    v = np.asarray(v, dtype=np.float64)
    a1 = v[..., 0:3]
    a2 = v[..., 3:6]
    n1 = np.linalg.norm(a1, axis=-1, keepdims=True)
    if np.any(n1 < eps):
        raise InvalidArgumentError("degenerate 6D rotation: zero first column")
    b1 = a1 / n1
    b2 = a2 - np.sum(b1 * a2, axis=-1, keepdims=True) * b1
    n2 = np.linalg.norm(b2, axis=-1, keepdims=True)
    if np.any(n2 < eps):
        raise InvalidArgumentError("degenerate 6D rotation: columns parallel or zero")
    b2 = b2 / n2
    b3 = np.cross(b1, b2)
    return np.stack([b1, b2, b3], axis=-1)


def from_6d(v):
    return from_matrix(matrix_from_6d(v))
