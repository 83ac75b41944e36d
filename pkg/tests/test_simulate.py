import dataclasses
import math

import numpy as np
import pytest

from wavegait.errors import DegenerateSupportError, StatisticsError
from wavegait.gait import GaitParams, frame_at
from wavegait.kinematics import BodyPose, RobotConfig, feet_for_frame
from wavegait.simulate import (
    CONTACT_EPS,
    SimState,
    detect_contacts,
    measure_speed_beta_correlation,
    run_cycle,
    settle_body,
    solve_twist,
)
from wavegait.terrain import generate_block_terrain, generate_flat_terrain, height_at


def DEG(d):
    return math.radians(d)


CFG = RobotConfig()
GAIT = GaitParams(theta_leg_amp=DEG(30), theta_body_amp=DEG(10))
START = BodyPose(x=1.0, y=1.5, z=0.0, yaw=0.0)


def flat(height=0.0):
    f = generate_flat_terrain()
    return dataclasses.replace(f, heights=f.heights + height)


class TestSettle:
    def test_flat_stance_touches(self):
        frame = frame_at(GAIT, 0.3)
        terrain = flat()
        z = settle_body(CFG, START, terrain, frame)
        pose = BodyPose(START.x, START.y, z, START.yaw)
        feet = feet_for_frame(CFG, pose, frame)
        stance = np.asarray(frame.ideal_contact, dtype=bool)
        clear = feet[stance, 2] - height_at(terrain, feet[stance, 0], feet[stance, 1])
        assert np.min(clear) == pytest.approx(0.0, abs=1e-12)
        assert np.all(clear >= -1e-12)

    def test_uniform_raise_shifts_z(self):
        frame = frame_at(GAIT, 0.3)
        z0 = settle_body(CFG, START, flat(), frame)
        z1 = settle_body(CFG, START, flat(0.04), frame)
        assert z1 - z0 == pytest.approx(0.04, abs=1e-12)

    def test_single_block_under_winner(self):
        # raise only the cell under the currently lowest stance foot: the
        # body must ride up by exactly the block height
        frame = frame_at(GAIT, 0.3)
        terrain = flat()
        z0 = settle_body(CFG, START, terrain, frame)
        pose = BodyPose(START.x, START.y, z0, START.yaw)
        feet = feet_for_frame(CFG, pose, frame)
        stance = np.asarray(frame.ideal_contact, dtype=bool)
        low = np.flatnonzero(stance)[np.argmin(feet[stance, 2])]
        j = int(feet[low, 0] / terrain.cell_size)
        i = int(feet[low, 1] / terrain.cell_size)
        heights = terrain.heights.copy()
        heights[i * terrain.n_cols + j] = 0.04
        bumped = dataclasses.replace(terrain, heights=heights)
        assert settle_body(CFG, START, bumped, frame) == pytest.approx(z0 + 0.04, abs=1e-12)

    def test_degenerate_support(self):
        frame = frame_at(GAIT, 0.3)
        airborne = dataclasses.replace(frame, ideal_contact=np.zeros_like(frame.ideal_contact))
        with pytest.raises(DegenerateSupportError):
            settle_body(CFG, START, flat(), airborne)


class TestDetectContacts:
    def test_threshold_band(self):
        terrain = flat()
        feet = np.array(
            [
                [1.0, 1.0, -0.001],  # below ground: contact
                [1.0, 1.2, 0.0],  # exactly on: contact
                [1.0, 1.4, CONTACT_EPS],  # at the eps boundary: contact
                [1.0, 1.6, CONTACT_EPS + 1e-9],  # just above: no contact
                [1.0, 1.8, 0.5],  # airborne
            ]
        )
        np.testing.assert_array_equal(
            detect_contacts(feet, terrain), [True, True, True, False, False]
        )

    def test_matches_brute_force(self):
        terrain = generate_block_terrain(0.3, seed=11)
        rng = np.random.default_rng(4)
        feet = np.column_stack(
            [rng.uniform(0.5, 9.5, 40), rng.uniform(0.5, 2.5, 40), rng.uniform(-0.1, 0.1, 40)]
        )
        got = detect_contacts(feet, terrain, eps=0.02)
        want = [z - height_at(terrain, x, y) <= 0.02 for x, y, z in feet]
        np.testing.assert_array_equal(got, want)


class TestSolveTwist:
    def test_no_feet_is_zero(self):
        np.testing.assert_array_equal(
            solve_twist(np.empty((0, 2)), np.empty((0, 2)), START), np.zeros(3)
        )

    def test_symmetric_pair_pure_translation(self):
        # two feet mirrored about the body, both commanded backwards:
        # the least-slip body motion is pure forward translation
        pose = BodyPose(0.0, 0.0, 0.0, 0.0)
        feet = np.array([[0.5, 0.2], [-0.5, -0.2]])
        cmds = np.array([[-0.3, 0.0], [-0.3, 0.0]])
        vx, vy, omega = solve_twist(feet, cmds, pose)
        assert vx == pytest.approx(0.3, rel=1e-5)
        assert vy == pytest.approx(0.0, abs=1e-9)
        assert omega == pytest.approx(0.0, abs=1e-9)

    def test_single_foot_spin(self):
        # one foot ahead of the body pushed sideways: translation plus spin
        pose = BodyPose(0.0, 0.0, 0.0, 0.0)
        twist = solve_twist([[1.0, 0.0]], [[0.0, 0.2]], pose)
        vx, vy, omega = twist
        # residual at the foot must (nearly) vanish: vy + omega*1 = -0.2
        assert vy + omega == pytest.approx(-0.2, abs=1e-5)
        assert vx == pytest.approx(0.0, abs=1e-9)

    def test_is_minimizer(self):
        # the returned twist beats random perturbations of itself on the
        # regularized least-squares objective
        rng = np.random.default_rng(8)
        pose = BodyPose(0.3, -0.2, 0.0, 0.0)
        feet = rng.normal(size=(5, 2))
        cmds = rng.normal(scale=0.1, size=(5, 2))
        best = solve_twist(feet, cmds, pose)

        def objective(t):
            vx, vy, om = t
            rx, ry = feet[:, 0] - pose.x, feet[:, 1] - pose.y
            slip_x = vx - om * ry + cmds[:, 0]
            slip_y = vy + om * rx + cmds[:, 1]
            return np.sum(slip_x**2 + slip_y**2) + 1e-6 * np.sum(t**2)

        j_best = objective(best)
        for _ in range(200):
            assert j_best <= objective(best + rng.normal(scale=0.05, size=3)) + 1e-12


class TestRunCycle:
    def test_flat_full_contact(self):
        state = SimState(pose=BodyPose(1.0, 1.5, 0.0, 0.0))
        out = run_cycle(state, CFG, GAIT, flat())
        assert out.beta == 1.0
        assert not out.terminal
        assert out.v_f > 0.0

    def test_zero_amplitudes_stay_put(self):
        p = GaitParams(theta_leg_amp=0.0, theta_body_amp=0.0, a_v=0.0)
        state = SimState(pose=BodyPose(1.0, 1.5, 0.0, 0.0))
        out = run_cycle(state, CFG, p, flat())
        assert out.displacement == pytest.approx((0.0, 0.0), abs=1e-9)

    def test_flat_speed_grows_with_leg_amplitude(self):
        speeds = []
        for amp in (10.0, 20.0, 30.0):
            p = GaitParams(theta_leg_amp=DEG(amp), theta_body_amp=DEG(10))
            state = SimState(pose=BodyPose(1.0, 1.5, 0.0, 0.0))
            speeds.append(run_cycle(state, CFG, p, flat()).v_f)
        assert speeds[0] < speeds[1] < speeds[2]

    def test_rough_terrain_loses_contact_and_speed(self):
        terrain = generate_block_terrain(0.32, seed=3)
        state = SimState(pose=BodyPose(1.0, 1.5, 0.0, 0.0))
        rough = run_cycle(state, CFG, GAIT, terrain)
        state = SimState(pose=BodyPose(1.0, 1.5, 0.0, 0.0))
        smooth = run_cycle(state, CFG, GAIT, flat())
        assert rough.beta < smooth.beta
        assert rough.v_f < smooth.v_f

    def test_deterministic(self):
        terrain = generate_block_terrain(0.3, seed=5)
        outs = []
        for _ in range(2):
            state = SimState(pose=BodyPose(1.0, 1.5, 0.0, 0.0))
            o = run_cycle(state, CFG, GAIT, terrain)
            outs.append((o.v_f, o.v_l, o.beta, o.displacement, state.pose.x, state.pose.yaw))
        assert outs[0] == outs[1]

    def test_terminal_on_field_exit(self):
        # start right at the far edge heading out: the cycle must flag
        # terminal instead of raising
        terrain = flat()
        state = SimState(pose=BodyPose(9.95, 1.5, 0.0, 0.0))
        out = run_cycle(state, CFG, GAIT, terrain)
        assert out.terminal

    def test_rotation_invariance(self):
        # rotating the terrain and the start pose by 90 degrees must not
        # change the forward/lateral speeds or the contact ratio
        base = generate_block_terrain(0.25, width=5.0, length=5.0, seed=9)
        n = base.n_rows
        assert n == base.n_cols
        cs = base.cell_size
        centers = (np.arange(n) + 0.5) * cs
        cx = cy = n * cs / 2.0
        gx, gy = np.meshgrid(centers, centers)  # gx varies over cols
        # inverse of a +90 degree rotation about the field centre
        sx = cx + (gy - cy)
        sy = cy - (gx - cx)
        rotated = dataclasses.replace(base, heights=height_at(base, sx, sy).ravel())

        s0 = SimState(pose=BodyPose(1.0, 2.5, 0.0, 0.0))
        a = run_cycle(s0, CFG, GAIT, base)
        s1 = SimState(pose=BodyPose(2.5, 1.0, 0.0, math.pi / 2.0))
        b = run_cycle(s1, CFG, GAIT, rotated)

        assert a.beta == b.beta
        assert a.v_f == pytest.approx(b.v_f, abs=1e-9)
        assert a.v_l == pytest.approx(b.v_l, abs=1e-9)

    def test_contact_log_shape_and_beta(self):
        state = SimState(pose=BodyPose(1.0, 1.5, 0.0, 0.0))
        out = run_cycle(state, CFG, GAIT, generate_block_terrain(0.3, seed=2), k_substeps=32)
        assert out.contact_log.shape == (32, 16, 2)
        matches = np.sum(out.contact_log[:, :, 0] == out.contact_log[:, :, 1])
        assert out.beta == matches / (32 * 16)


class TestCorrelation:
    def test_needs_two_runs(self):
        with pytest.raises(StatisticsError):
            measure_speed_beta_correlation(CFG, GAIT, [4.0], [0])

    def test_degenerate_returns_none(self):
        # sigma=0 terrain is a constant plateau: beta pins at 1.0 on every
        # cycle, so the correlation is undefined
        assert measure_speed_beta_correlation(CFG, GAIT, [0.0], [0, 1]) is None

    def test_rough_fields_correlate(self):
        r = measure_speed_beta_correlation(CFG, GAIT, [2.0, 6.0], [0, 1, 2])
        assert -1.0 <= r <= 1.0
        assert r > 0.3
