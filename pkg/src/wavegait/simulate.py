"""Quasi-kinematic locomotion simulator.

Per substep: evaluate the gait frame, settle the body height so the lowest
ideal-stance foot just touches the terrain, detect actual contacts, then
solve the least-slip planar twist from the feet that are both in ideal
stance and in actual contact.  Contact mismatch reduces propulsion, which is
what both feedback controllers exploit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSupportError, StatisticsError, TerrainBoundsError
from .gait import TWO_PI, GaitParams, JointFrameSample, batched_frames
from .kinematics import BodyPose, RobotConfig, batched_body_feet, feet_for_frame
from .terrain import HeightField, generate_rl_terrain, height_at

CONTACT_EPS = 0.005  # 5 mm clearance counts as touching (single-frame queries)
# Cycle integration uses a looser tolerance: with winner-take-all settling the
# non-winning feet hang at clearances set by block-height differences, so the
# contact band has to admit compliant leg travel or beta saturates near its
# floor on any rough field and stops grading with sigma.
SIM_CONTACT_EPS = 0.02
TWIST_REG = 1e-6  # Tikhonov weight on the normal equations


@dataclass
class SimState:
    pose: BodyPose
    tau_b: float = 0.0
    cycle_index: int = 0


@dataclass(frozen=True)
class CycleOutcome:
    """Result of one full motion cycle."""

    v_f: float  # displacement along the cycle-start heading (m/cycle)
    v_l: float  # signed lateral displacement (m/cycle)
    beta: float  # contact ratio over all (leg, substep) samples
    displacement: tuple[float, float]
    contact_log: np.ndarray  # (k_substeps, 2N, 2) bools: [ideal, actual]
    terminal: bool = False  # robot left the field mid-cycle

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta out of [0, 1]")


def settle_body(cfg: RobotConfig, pose: BodyPose, terrain: HeightField, frame: JointFrameSample) -> float:
    """Body height z at which the lowest ideal-stance foot clearance is zero."""
    ref = BodyPose(pose.x, pose.y, 0.0, pose.yaw)
    feet = feet_for_frame(cfg, ref, frame)
    stance = np.asarray(frame.ideal_contact, dtype=bool)
    if not np.any(stance):
        raise DegenerateSupportError("no ideal-stance feet at this phase")
    ground = height_at(terrain, feet[stance, 0], feet[stance, 1])
    return float(np.max(ground - feet[stance, 2]))


def detect_contacts(feet, terrain: HeightField, eps: float = CONTACT_EPS):
    """Actual contact flags: foot within eps of (or below) its cell height."""
    feet = np.asarray(feet, dtype=float)
    ground = height_at(terrain, feet[:, 0], feet[:, 1])
    return feet[:, 2] - ground <= eps


def solve_twist(stance_feet, commanded_vels, pose: BodyPose):
    """Least-slip planar twist (vx, vy, omega) about the body origin.

    Minimizes sum ||v(foot_k) + c_k||^2 where v(foot) = (vx - w*ry, vy + w*rx)
    and r_k is the foot offset from the pose.  Solved via regularized 3x3
    normal equations; no contributing feet gives a zero twist.
    """
    pts = np.asarray(stance_feet, dtype=float).reshape(-1, 2)
    cmds = np.asarray(commanded_vels, dtype=float).reshape(-1, 2)
    if pts.shape[0] == 0:
        return np.zeros(3)
    rx = pts[:, 0] - pose.x
    ry = pts[:, 1] - pose.y
    k = pts.shape[0]
    a = np.zeros((2 * k, 3))
    a[0::2, 0] = 1.0
    a[0::2, 2] = -ry
    a[1::2, 1] = 1.0
    a[1::2, 2] = rx
    b = -cmds.reshape(-1)
    ata = a.T @ a + TWIST_REG * np.eye(3)
    atb = a.T @ b
    return np.linalg.solve(ata, atb)


def _rotate(vecs, yaw):
    c, s = math.cos(yaw), math.sin(yaw)
    rot = np.array([[c, -s], [s, c]])
    return vecs @ rot.T


def cycle_geometry(cfg: RobotConfig, gait: GaitParams, k_substeps: int, tau_b0: float):
    """Body-frame geometry for every substep of one cycle.

    Returns (xy (k,2N,2), z (k,2N), ideal (k,2N), vels (k,2N,2)); vels are
    central-difference commanded foot velocities in the body frame.  The
    pose does not enter, so this is computed once per cycle.
    """
    d_tau = 1e-5
    taus = tau_b0 + TWO_PI * np.arange(k_substeps) / k_substeps
    all_taus = np.concatenate([taus, taus + d_tau, taus - d_tau])
    shoulders, yaw, pitch, contact = batched_frames(gait, all_taus)
    xy, z = batched_body_feet(cfg, yaw, pitch, shoulders, ~contact)
    k = k_substeps
    vels = (xy[k : 2 * k] - xy[2 * k :]) / (2.0 * d_tau) * (TWO_PI / gait.cycle_period)
    return xy[:k], z[:k], contact[:k], vels


def run_cycle(
    state: SimState,
    cfg: RobotConfig,
    gait: GaitParams,
    terrain: HeightField,
    k_substeps: int = 64,
    eps: float = SIM_CONTACT_EPS,
    traction: bool = True,
) -> CycleOutcome:
    """Advance tau_b by 2*pi, integrating the settled least-slip motion."""
    pose = state.pose
    x0, y0, yaw0 = pose.x, pose.y, pose.yaw
    dt = gait.cycle_period / k_substeps
    n_feet = 2 * cfg.n_pairs
    log = np.zeros((k_substeps, n_feet, 2), dtype=bool)
    matches = 0
    terminal = False
    rel_xy, rel_z, ideal_all, body_vels = cycle_geometry(cfg, gait, k_substeps, state.tau_b)

    for s in range(k_substeps):
        ideal = ideal_all[s]
        c, sn = math.cos(pose.yaw), math.sin(pose.yaw)
        rot = np.array([[c, -sn], [sn, c]])
        world_xy = np.array([pose.x, pose.y]) + rel_xy[s] @ rot.T
        try:
            ground = height_at(terrain, world_xy[:, 0], world_xy[:, 1])
        except TerrainBoundsError:
            terminal = True
            break
        # settle: lowest ideal-stance clearance is exactly zero
        pose.z = float(np.max(ground[ideal] - rel_z[s][ideal]))
        actual = rel_z[s] + pose.z - ground <= eps

        log[s, :, 0] = ideal
        log[s, :, 1] = actual
        matches += int(np.sum(ideal == actual))

        matched = ideal & actual
        if np.any(matched):
            world_vels = body_vels[s][matched] @ rot.T
            vx, vy, omega = solve_twist(world_xy[matched], world_vels, pose)
            if traction:
                # quasi-static load sharing: propulsion scales with the
                # fraction of stance legs that actually grip
                scale = float(np.sum(matched)) / float(np.sum(ideal))
                vx, vy, omega = scale * vx, scale * vy, scale * omega
        else:
            vx = vy = omega = 0.0

        pose.x += vx * dt
        pose.y += vy * dt
        pose.yaw = math.atan2(math.sin(pose.yaw + omega * dt), math.cos(pose.yaw + omega * dt))
        state.tau_b += TWO_PI / k_substeps

    state.cycle_index += 1

    dx, dy = pose.x - x0, pose.y - y0
    head = (math.cos(yaw0), math.sin(yaw0))
    v_f = dx * head[0] + dy * head[1]
    v_l = -dx * head[1] + dy * head[0]
    denom = n_feet * k_substeps
    beta = matches / denom
    return CycleOutcome(
        v_f=v_f,
        v_l=v_l,
        beta=beta,
        displacement=(dx, dy),
        contact_log=log,
        terminal=terminal,
    )


def measure_speed_beta_correlation(
    cfg: RobotConfig,
    gait: GaitParams,
    sigmas,
    seeds,
    cycles_per_run: int = 2,
    start=(1.0, 1.5, 0.0),
):
    """Pearson correlation between per-cycle v_f and beta across randomized
    runs.  Returns None when either series is degenerate (zero variance)."""
    pairs = [(sg, sd) for sg in sigmas for sd in seeds]
    if len(pairs) < 2:
        raise StatisticsError("need at least 2 (sigma, seed) runs")
    vf, beta = [], []
    for sigma, seed in pairs:
        field_ = generate_rl_terrain(sigma, seed=seed)
        state = SimState(pose=BodyPose(*start))
        for _ in range(cycles_per_run):
            out = run_cycle(state, cfg, gait, field_)
            vf.append(out.v_f)
            beta.append(out.beta)
            if out.terminal:
                break
    vf = np.asarray(vf)
    beta = np.asarray(beta)
    if len(vf) < 2:
        raise StatisticsError("fewer than 2 completed cycles")
    if np.ptp(vf) == 0.0 or np.ptp(beta) == 0.0:
        return None
    return float(np.corrcoef(vf, beta)[0, 1])
