import math

import numpy as np
import pytest

from rmd.errors import InvalidArgumentError
from rmd.motion import (
    FeatureLayout,
    default_skeleton,
    feature_dim,
    forward_kinematics,
    from_pose_features,
    root_origin,
    to_pose_features,
)
from rmd.motion import quaternion as quat
from rmd.motion import synthetic

SK = default_skeleton()
LAYOUT = FeatureLayout(22)


def test_width_is_263():
    assert feature_dim(SK) == 263 == 4 + 21 * 3 + 21 * 6 + 22 * 3 + 4
    assert LAYOUT.contacts.stop == 263


def test_static_pose():
    f = to_pose_features(synthetic.static_clip(12), SK)
    assert np.all(f[:, 0:3] == 0)
    assert np.all(f[:, LAYOUT.velocities] == 0)
    assert np.all(f[:, LAYOUT.contacts] == 1)
    np.testing.assert_allclose(f[:, 3], synthetic.PELVIS_HEIGHT)


def test_identity_rotation_blocks():
    f = to_pose_features(synthetic.static_clip(3), SK)
    blocks = f[:, LAYOUT.rotations].reshape(3, 21, 6)
    assert np.all(blocks == np.array([1, 0, 0, 0, 1, 0]))


def test_forward_walk_root_channels():
    f = to_pose_features(synthetic.linear_walk(30, speed=0.05), SK)
    np.testing.assert_allclose(f[:, 2], 0.05, atol=1e-12)
    np.testing.assert_allclose(f[:, 1], 0.0, atol=1e-12)
    np.testing.assert_allclose(f[:, 0], 0.0, atol=1e-12)
    # feet move 0.05 m/frame -> speed^2 = 2.5e-3 > 2e-3: no contact
    assert np.all(f[:, LAYOUT.contacts] == 0)


def test_heading_does_not_change_features():
    a = to_pose_features(synthetic.linear_walk(20, speed=0.03, heading=0.0, gait=True), SK)
    b = to_pose_features(synthetic.linear_walk(20, speed=0.03, heading=1.3, gait=True), SK)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_yaw_velocity():
    c = synthetic.turning_walk(25, turn_rate=0.07)
    f = to_pose_features(c, SK)
    np.testing.assert_allclose(f[:, 0], 0.07, atol=1e-12)
    np.testing.assert_allclose(f[:-1, 2], 0.04, atol=1e-12)


def test_joint_velocities_are_position_differences():
    c = synthetic.action_clip("clap", "walk", 30, seed=1)
    f = to_pose_features(synthetic.linear_walk(30, gait=True), SK)
    pos = forward_kinematics(synthetic.linear_walk(30, gait=True), SK)
    jv = f[:, LAYOUT.velocities].reshape(30, 22, 3)
    np.testing.assert_allclose(jv[:-1], pos[1:] - pos[:-1], atol=1e-9)
    np.testing.assert_array_equal(jv[-1], jv[-2])

    # with a heading, velocities are expressed in the heading frame
    f = to_pose_features(c, SK)
    pos = forward_kinematics(c, SK)
    yaw = quat.heading_angle(c.joint_rotations[:, 0])
    jv = f[:, LAYOUT.velocities].reshape(30, 22, 3)
    for t in (0, 10, 28):
        a = -yaw[t]
        ry = np.array([[math.cos(a), 0, math.sin(a)], [0, 1, 0], [-math.sin(a), 0, math.cos(a)]])
        np.testing.assert_allclose(jv[t], (pos[t + 1] - pos[t]) @ ry.T, atol=1e-9)


def test_positions_root_relative():
    c = synthetic.linear_walk(5, speed=0.1, height=0.9)
    f = to_pose_features(c, SK)
    jp = f[:, LAYOUT.positions].reshape(5, 21, 3)
    pos = forward_kinematics(c, SK)
    np.testing.assert_allclose(jp, pos[:, 1:] - pos[:, :1] * [1, 0, 1], atol=1e-12)


def test_rotation_blocks_orthonormal():
    f = to_pose_features(synthetic.action_clip("wave_right", "circle", 20, seed=4), SK)
    m = quat.matrix_from_6d(f[:, LAYOUT.rotations].reshape(-1, 6))
    eye = np.einsum("nji,njk->nik", m, m)
    np.testing.assert_allclose(eye, np.broadcast_to(np.eye(3), eye.shape), atol=1e-5)
    v = f[:, LAYOUT.rotations].reshape(-1, 2, 3)
    np.testing.assert_allclose(np.linalg.norm(v, axis=-1), 1.0, atol=1e-5)
    np.testing.assert_allclose(np.sum(v[:, 0] * v[:, 1], axis=-1), 0.0, atol=1e-5)


def test_contacts_threshold_is_configurable():
    c = synthetic.linear_walk(10, speed=0.01)
    assert np.all(to_pose_features(c, SK)[:, LAYOUT.contacts] == 1)
    assert np.all(to_pose_features(c, SK, contact_threshold=1e-5)[:, LAYOUT.contacts] == 0)


def test_single_frame_rejected():
    with pytest.raises(InvalidArgumentError):
        to_pose_features(synthetic.static_clip(1), SK)


class TestFromPoseFeatures:
    def test_static(self):
        f = np.zeros((6, 263))
        f[:, 3] = 0.8
        f[:, LAYOUT.rotations] = np.tile([1, 0, 0, 0, 1, 0], 21)
        # children of the pelvis at their rest offsets
        jp = np.tile(SK.rest_offsets[1:], (6, 1, 1)).copy()
        for j in range(1, 22):
            p = SK.parent_index[j]
            if p > 0:
                jp[:, j - 1] += jp[:, p - 1]
        jp[..., 1] += 0.8
        f[:, LAYOUT.positions] = jp.reshape(6, -1)
        c = from_pose_features(f, SK)
        np.testing.assert_allclose(c.root_translation, np.tile([0, 0.8, 0], (6, 1)), atol=1e-15)
        assert quat.angle_between(c.joint_rotations, quat.IDENTITY).max() < 1e-7

    def test_integrates_forward_velocity(self):
        f = to_pose_features(synthetic.static_clip(15), SK)
        f[:, 2] = 0.05
        c = from_pose_features(f, SK)
        np.testing.assert_allclose(c.root_translation[:, 2], 0.05 * np.arange(15), atol=1e-12)
        np.testing.assert_allclose(c.root_translation[:, 0], 0.0, atol=1e-12)

    def test_integrates_turning(self):
        f = to_pose_features(synthetic.static_clip(4), SK)
        f[:, 0] = math.pi / 2
        f[:, 2] = 1.0
        c = from_pose_features(f, SK)
        # heading 0 -> +Z, pi/2 -> +X, pi -> -Z
        np.testing.assert_allclose(c.root_translation[:, [0, 2]], [[0, 0], [0, 1], [1, 1], [1, 0]], atol=1e-12)

    def test_roundtrip_walk(self):
        c = synthetic.linear_walk(40, gait=True)
        f = to_pose_features(c, SK)
        back = from_pose_features(f, SK)
        assert np.abs(to_pose_features(back, SK) - f).max() < 1e-4
        np.testing.assert_allclose(back.root_translation, c.root_translation, atol=1e-9)
        assert quat.angle_between(back.joint_rotations, c.joint_rotations).max() < 1e-7

    def test_origin_reanchors(self):
        c = synthetic.turning_walk(30, heading0=2.0, tilt=0.15)
        back = from_pose_features(to_pose_features(c, SK), SK, fps=c.fps, origin=root_origin(c))
        np.testing.assert_allclose(back.root_translation, c.root_translation, atol=1e-9)
        assert quat.angle_between(back.joint_rotations, c.joint_rotations).max() < 1e-7

    def test_bad_width(self):
        with pytest.raises(InvalidArgumentError):
            from_pose_features(np.zeros((3, 262)), SK)

    def test_degenerate_rotation_block(self):
        f = to_pose_features(synthetic.static_clip(3), SK)
        f[1, LAYOUT.rotations.start:LAYOUT.rotations.start + 6] = 0.0
        with pytest.raises(InvalidArgumentError):
            from_pose_features(f, SK)
