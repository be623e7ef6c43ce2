"""Tests for the kinematic walking surrogate."""
import math

import numpy as np
import pytest

from gaitlab import surrogate as S
from gaitlab.errors import ConfigError, DataError


@pytest.fixture(scope="module")
def hexapod():
    return S.RobotGeometry()


class TestGeometry:
    def test_defaults(self, hexapod):
        assert hexapod.n_legs == 6
        assert hexapod.n_joints == 18
        assert hexapod.coxa + hexapod.femur + hexapod.tibia == pytest.approx(
            0.25
        )
        assert hexapod.body_length == pytest.approx(0.30)

    def test_hexapod_hip_layout(self, hexapod):
        hips = hexapod.hip_positions()
        assert len(hips) == 6
        # right side front-to-back, then left side front-to-back
        assert hips[0] == (0.15, -0.06, -1.0)
        assert hips[1] == (0.0, -0.06, -1.0)
        assert hips[2] == (-0.15, -0.06, -1.0)
        assert hips[3] == (0.15, 0.06, 1.0)
        assert hips[5] == (-0.15, 0.06, 1.0)

    def test_quadruped_drops_middle_legs(self):
        quad = S.RobotGeometry(n_legs=4)
        hips = quad.hip_positions()
        assert len(hips) == 4
        assert [h[0] for h in hips] == [0.15, -0.15, 0.15, -0.15]

    def test_invalid_geometry_rejected(self):
        with pytest.raises(ConfigError):
            S.RobotGeometry(n_legs=5)
        with pytest.raises(ConfigError):
            S.RobotGeometry(coxa=0.06)  # segments no longer sum to 0.25
        with pytest.raises(ConfigError):
            S.RobotGeometry(body_length=0.31)
        with pytest.raises(ConfigError):
            S.ContactModel(rate_limit=0.0)
        with pytest.raises(ConfigError):
            S.ContactModel(slip_factor=1.5)


class TestForwardKinematics:
    def test_neutral_stance_point(self, hexapod):
        feet = S.forward_kinematics(np.zeros((6, 3)), hexapod)
        for i, (hip_x, hip_y, side) in enumerate(hexapod.hip_positions()):
            np.testing.assert_allclose(
                feet[i], [hip_x, side * 0.21, -0.10], atol=1e-12
            )

    def test_full_extension_reaches_leg_length(self, hexapod):
        joints = np.zeros((6, 3))
        joints[:, 2] = math.pi / 2  # straighten the tibia
        feet = S.forward_kinematics(joints, hexapod)
        for i, (hip_x, hip_y, _s) in enumerate(hexapod.hip_positions()):
            reach = math.hypot(feet[i, 0] - hip_x, feet[i, 1] - hip_y)
            assert reach == pytest.approx(0.25, abs=1e-12)
            assert feet[i, 2] == pytest.approx(0.0, abs=1e-12)

    def test_swing_joint_rotates_about_vertical_axis(self, hexapod):
        base = S.forward_kinematics(np.zeros((6, 3)), hexapod)
        joints = np.zeros((6, 3))
        joints[:, 0] = 0.1
        feet = S.forward_kinematics(joints, hexapod)
        for i, (hip_x, hip_y, side) in enumerate(hexapod.hip_positions()):
            r0 = math.hypot(base[i, 0] - hip_x, base[i, 1] - hip_y)
            r1 = math.hypot(feet[i, 0] - hip_x, feet[i, 1] - hip_y)
            assert r1 == pytest.approx(r0, abs=1e-12)  # isometry
            a0 = math.atan2(base[i, 0] - hip_x, (base[i, 1] - hip_y) * side)
            a1 = math.atan2(feet[i, 0] - hip_x, (feet[i, 1] - hip_y) * side)
            assert a1 - a0 == pytest.approx(0.1, abs=1e-12)
            assert feet[i, 2] == base[i, 2]  # height untouched by swing
            assert feet[i, 0] > base[i, 0]  # +swing moves the foot forward

    def test_mirrored_joints_give_mirrored_feet_exactly(self, hexapod):
        rng = np.random.default_rng(1)
        right = rng.uniform(-0.3, 0.3, (3, 3))
        joints = np.vstack([right, right])  # left legs copy right twins
        feet = S.forward_kinematics(joints, hexapod)
        np.testing.assert_array_equal(feet[3:, 0], feet[:3, 0])
        np.testing.assert_array_equal(feet[3:, 1], -feet[:3, 1])
        np.testing.assert_array_equal(feet[3:, 2], feet[:3, 2])

    def test_bad_inputs_rejected(self, hexapod):
        with pytest.raises(DataError):
            S.forward_kinematics(np.zeros((4, 3)), hexapod)
        with pytest.raises(DataError):
            S.forward_kinematics(np.full((6, 3), np.nan), hexapod)


class TestEnvStep:
    def test_zero_command_is_fixed_point(self, hexapod):
        w = S.reset(hexapod)
        for _ in range(50):
            w, r = S.env_step(w, np.zeros(18))
            assert (w.x, w.y, w.psi) == (0.0, 0.0, 0.0)
            assert r == 0.0

    def test_commands_matching_joints_give_zero_reward(self, hexapod):
        rng = np.random.default_rng(2)
        w = S.reset(hexapod)
        # walk to an arbitrary joint configuration first
        for cmd in rng.uniform(-0.3, 0.3, (10, 18)):
            w, _ = S.env_step(w, cmd)
        w2, r = S.env_step(w, w.joints.reshape(-1))
        assert r == 0.0
        assert (w2.x, w2.y, w2.psi) == (w.x, w.y, w.psi)

    def test_rate_limit(self, hexapod):
        w = S.reset(hexapod)
        cmd = np.full(18, 0.3)
        w, _ = S.env_step(w, cmd)
        np.testing.assert_array_equal(w.joints, np.full((6, 3), 0.2))
        w, _ = S.env_step(w, cmd)
        np.testing.assert_allclose(w.joints, np.full((6, 3), 0.3), atol=1e-15)

    def test_commands_clipped_to_output_range(self, hexapod):
        w = S.reset(hexapod)
        for _ in range(10):
            w, _ = S.env_step(w, np.full(18, 5.0))
        np.testing.assert_allclose(w.joints, np.full((6, 3), 0.3), atol=1e-15)

    def test_symmetric_command_cancels_drift_exactly(self, hexapod):
        rng = np.random.default_rng(3)
        w = S.reset(hexapod)
        cmd = rng.uniform(-0.3, 0.3, (6, 3))
        cmd[3:] = cmd[:3]  # left legs copy right twins
        for _ in range(40):
            w, _ = S.env_step(w, cmd.reshape(-1))
        assert w.y == 0.0
        assert w.psi == 0.0

    def test_mirrored_rollout_negates_y_and_psi_exactly(self, hexapod):
        rng = np.random.default_rng(4)
        seq = rng.uniform(-0.3, 0.3, (80, 18))
        states, rew = S.rollout(S.reset(hexapod), seq)
        mstates, mrew = S.rollout(
            S.reset(hexapod), S.mirror_commands(seq, 6)
        )
        np.testing.assert_array_equal(
            [s.x for s in states], [s.x for s in mstates]
        )
        np.testing.assert_array_equal(
            [s.y for s in states], [-s.y for s in mstates]
        )
        np.testing.assert_array_equal(
            [s.psi for s in states], [-s.psi for s in mstates]
        )

    def test_mirror_commands_is_an_involution(self):
        rng = np.random.default_rng(5)
        seq = rng.uniform(-0.3, 0.3, (7, 18))
        np.testing.assert_array_equal(
            S.mirror_commands(S.mirror_commands(seq, 6), 6), seq
        )
        one = np.arange(18.0)
        swapped = S.mirror_commands(one, 6)
        np.testing.assert_array_equal(swapped[:9], one[9:])
        np.testing.assert_array_equal(swapped[9:], one[:9])

    def test_determinism_is_bitwise(self, hexapod):
        rng = np.random.default_rng(6)
        seq = rng.uniform(-0.3, 0.3, (60, 18))
        s1, r1 = S.rollout(S.reset(hexapod), seq)
        s2, r2 = S.rollout(S.reset(hexapod), seq)
        np.testing.assert_array_equal(r1, r2)
        for a, b in zip(s1, s2):
            assert (a.x, a.y, a.psi) == (b.x, b.y, b.psi)
            np.testing.assert_array_equal(a.feet, b.feet)
            np.testing.assert_array_equal(a.contacts, b.contacts)

    def test_stance_is_h_lowest_feet_with_margin(self, hexapod):
        # lift three legs well clear of the ground: the three low feet
        # (tied heights, within the 1 mm margin) carry the body
        w = S.reset(hexapod)
        cmd = np.zeros((6, 3))
        cmd[[1, 3, 5], 1] = 0.3  # raise femur of legs 2, 4, 6
        for _ in range(5):
            w, _ = S.env_step(w, cmd.reshape(-1))
        np.testing.assert_array_equal(
            w.contacts, [True, False, True, False, True, False]
        )

    def test_slip_scales_displacement_by_factor(self, hexapod):
        # reach a tripod phase (exactly 3 grounded feet), then demand at
        # least 4: the same step's displacement shrinks by exactly 0.1
        w = S.reset(hexapod)
        lift = np.zeros((6, 3))
        lift[[1, 3, 5], 1] = 0.3
        for _ in range(5):
            w, _ = S.env_step(w, lift.reshape(-1))
        push = lift.copy()
        push[[0, 2, 4], 0] = 0.2  # sweep the grounded legs
        normal, _ = S.env_step(w, push.reshape(-1))
        strict = S.ContactModel(min_stance=4)
        slipped, _ = S.env_step(w, push.reshape(-1), contact=strict)
        assert np.count_nonzero(normal.contacts) == 3
        assert normal.x != 0.0 or normal.y != 0.0
        assert slipped.x == pytest.approx(0.1 * normal.x, rel=1e-12)
        assert slipped.y == pytest.approx(0.1 * normal.y, rel=1e-12)
        assert slipped.psi == pytest.approx(0.1 * normal.psi, rel=1e-12)

    def test_body_frame_displacement_is_pose_invariant(self, hexapod):
        rng = np.random.default_rng(7)
        w0 = S.reset(hexapod)
        cmds = rng.uniform(-0.3, 0.3, (5, 18))
        for cmd in cmds[:-1]:
            w0, _ = S.env_step(w0, cmd)
        # same joints, pose translated and rotated
        w1 = S.WorldState(
            x=1.0,
            y=2.0,
            psi=0.7,
            joints=w0.joints.copy(),
            feet=w0.feet.copy(),
            contacts=w0.contacts.copy(),
        )
        a, _ = S.env_step(w0, cmds[-1])
        b, _ = S.env_step(w1, cmds[-1])
        da = np.array([a.x - w0.x, a.y - w0.y])
        db = np.array([b.x - w1.x, b.y - w1.y])
        c, s = math.cos(0.7 - w0.psi), math.sin(0.7 - w0.psi)
        rot = np.array([[c, -s], [s, c]])
        np.testing.assert_allclose(db, rot @ da, atol=1e-15)
        assert b.psi - w1.psi == pytest.approx(a.psi - w0.psi, abs=1e-15)

    def test_speed_bound_over_random_rollouts(self, hexapod):
        # net displacement over any gait-cycle-length window stays under
        # twice the fully extended leg length (0.5 m)
        for seed in range(5):
            rng = np.random.default_rng(seed)
            seq = rng.uniform(-0.3, 0.3, (300, 18))
            states, _ = S.rollout(S.reset(hexapod), seq)
            xy = np.array([[st.x, st.y] for st in states])
            window = 73  # one rhythm-network cycle, rounded up
            for a in range(len(xy) - window):
                assert np.linalg.norm(xy[a + window] - xy[a]) <= 0.5

    def test_hand_tripod_gait_walks_forward(self, hexapod):
        T = 70
        cmds = np.zeros((T, 6, 3))
        for t in range(T):
            phase = (t // 20) % 2
            frac = (t % 20) / 19.0
            back = 0.25 - 0.5 * frac
            fwd = -0.25 + 0.5 * frac
            for leg in range(6):
                in_a = leg in (0, 2, 4)
                stance = (phase == 0) == in_a
                cmds[t, leg] = (back, 0.0, 0.0) if stance else (fwd, 0.2, 0.0)
        states, rew = S.rollout(S.reset(hexapod), cmds.reshape(T, 18))
        assert rew.sum() > 0.05
        assert states[-1].x > 0.05

    def test_quadruped_mode(self):
        quad = S.RobotGeometry(n_legs=4)
        w = S.reset(quad)
        assert w.joints.shape == (4, 3)
        rng = np.random.default_rng(8)
        cmd = rng.uniform(-0.3, 0.3, (4, 3))
        cmd[2:] = cmd[:2]
        for _ in range(20):
            w, _ = S.env_step(w, cmd.reshape(-1), geometry=quad)
        assert w.y == 0.0 and w.psi == 0.0
        with pytest.raises(DataError):
            S.env_step(w, np.zeros(18), geometry=quad)


class TestRewards:
    @staticmethod
    def state_at(x, y, psi):
        return S.WorldState(
            x=x,
            y=y,
            psi=psi,
            joints=np.zeros((6, 3)),
            feet=np.zeros((6, 3)),
            contacts=np.ones(6, dtype=bool),
        )

    def test_reward_sim_examples(self):
        a = self.state_at(0.0, 0.0, 0.0)
        assert S.reward_sim(a, self.state_at(0.02, 0.005, 0.0)) == pytest.approx(
            0.015
        )
        assert S.reward_sim(a, self.state_at(0.0, 0.01, 0.0)) == pytest.approx(
            -0.01
        )
        assert S.reward_sim(a, a) == 0.0

    def test_reward_heading_examples(self):
        a = self.state_at(0.0, 0.0, 0.0)
        assert S.reward_heading(
            a, self.state_at(0.02, 0.3, 0.0)
        ) == pytest.approx(0.02)
        assert S.reward_heading(
            a, self.state_at(0.0, 0.01, math.pi / 2)
        ) == pytest.approx(0.01)
        assert S.reward_heading(a, a) == 0.0

    def test_env_step_reward_modes(self, ):
        hexapod = S.RobotGeometry()
        rng = np.random.default_rng(9)
        w = S.reset(hexapod)
        for cmd in rng.uniform(-0.3, 0.3, (5, 18)):
            w, _ = S.env_step(w, cmd)
        cmd = rng.uniform(-0.3, 0.3, 18)
        w_sim, r_sim = S.env_step(w, cmd, reward_mode="sim")
        w_head, r_head = S.env_step(w, cmd, reward_mode="heading")
        assert r_sim == S.reward_sim(w, w_sim)
        assert r_head == S.reward_heading(w, w_head)
        with pytest.raises(ConfigError):
            S.env_step(w, cmd, reward_mode="bogus")


class TestReset:
    def test_full_reset_is_reproducible(self):
        g = S.RobotGeometry()
        a, b = S.reset(g), S.reset(g)
        assert (a.x, a.y, a.psi) == (b.x, b.y, b.psi) == (0.0, 0.0, 0.0)
        np.testing.assert_array_equal(a.joints, b.joints)
        np.testing.assert_array_equal(a.feet, b.feet)

    def test_pose_only_keeps_joints(self):
        g = S.RobotGeometry()
        rng = np.random.default_rng(10)
        w = S.reset(g)
        for cmd in rng.uniform(-0.3, 0.3, (15, 18)):
            w, _ = S.env_step(w, cmd)
        assert w.x != 0.0
        r = S.reset(g, "pose_only", state=w)
        assert (r.x, r.y, r.psi) == (0.0, 0.0, 0.0)
        np.testing.assert_array_equal(r.joints, w.joints)

    def test_none_is_identity(self):
        g = S.RobotGeometry()
        w = S.reset(g)
        assert S.reset(g, "none", state=w) is w

    def test_partial_modes_need_state(self):
        g = S.RobotGeometry()
        with pytest.raises(ConfigError):
            S.reset(g, "pose_only")
        with pytest.raises(ConfigError):
            S.reset(g, "none")
        with pytest.raises(ConfigError):
            S.reset(g, "warm")


class TestRolloutCsv:
    def test_round_trip(self, tmp_path):
        g = S.RobotGeometry()
        rng = np.random.default_rng(11)
        seq = rng.uniform(-0.3, 0.3, (12, 18))
        states, rewards = S.rollout(S.reset(g), seq)
        path = tmp_path / "rollout.csv"
        S.write_rollout_csv(path, states, rewards)
        text = path.read_text()
        assert "\r" not in text
        lines = text.strip().split("\n")
        header = lines[0].split(",")
        assert header[:5] == ["t", "x", "y", "psi", "r"]
        assert header[5:11] == [f"contact_{i}" for i in range(1, 7)]
        assert len(header) == 5 + 6 + 18
        assert len(lines) == 1 + 13  # start state + 12 steps
        first = lines[1].split(",")
        assert first[0] == "0" and float(first[4]) == 0.0
        for t, line in enumerate(lines[2:], start=1):
            vals = line.split(",")
            assert float(vals[4]) == pytest.approx(
                rewards[t - 1], rel=1e-8, abs=1e-12
            )
            assert all(v in ("0", "1") for v in vals[5:11])

    def test_length_mismatch_rejected(self, tmp_path):
        g = S.RobotGeometry()
        states, rewards = S.rollout(
            S.reset(g), np.zeros((3, 18))
        )
        with pytest.raises(DataError):
            S.write_rollout_csv(tmp_path / "bad.csv", states, rewards[:-1])
