"""Backbone and leg geometry for an N-pair articulated robot.

The base frame is SE(2) plus a height: x, y, yaw and a backbone reference
height z.  Vertical shape comes only from the pitch joints.  Legs are rigid
links whose feet sweep fore-aft with the shoulder angle; a swing leg is
raised by a fixed lift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractViolationError
from .gait import TWO_PI, GaitParams, coordinate_phases, frame_at, ideal_contact, JointFrameSample


@dataclass(frozen=True)
class RobotConfig:
    n_pairs: int = 8
    link_length: float = 0.10
    hip_half_width: float = 0.06
    leg_length: float = 0.08
    swing_lift: float = 0.03
    standing_height: float = 0.05

    def __post_init__(self):
        for name in ("link_length", "hip_half_width", "leg_length", "swing_lift", "standing_height"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.n_pairs < 2:
            raise ConfigurationError("need at least 2 leg pairs")


@dataclass
class BodyPose:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        self.yaw = wrap_angle(self.yaw)


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    w = math.fmod(a + math.pi, TWO_PI)
    if w <= 0.0:
        w += TWO_PI
    return w - math.pi


def backbone_frames(cfg: RobotConfig, pose: BodyPose, yaw_joints, pitch_joints):
    """Segment frames: positions (N,2), headings (N,), elevations (N,).

    Segment 1 sits at the pose; each next segment is placed by advancing
    link_length along the current heading and slope, after which joint k
    bends the heading and the cumulative pitch.
    """
    yaw_joints = np.asarray(yaw_joints, dtype=float)
    pitch_joints = np.asarray(pitch_joints, dtype=float)
    n = cfg.n_pairs
    if yaw_joints.shape != (n - 1,) or pitch_joints.shape != (n - 1,):
        raise ConfigurationError(f"expected {n - 1} joint angles per axis")

    # Heading/pitch of link k (0-based, from segment k to k+1) is the
    # cumulative sum of joints 0..k-1; the first link follows the pose.
    headings = pose.yaw + np.concatenate([[0.0], np.cumsum(yaw_joints)])
    cum_pitch = np.concatenate([[0.0], np.cumsum(pitch_joints)])

    link_head = headings[:-1]
    link_pitch = cum_pitch[:-1]
    dx = cfg.link_length * np.cos(link_head)
    dy = cfg.link_length * np.sin(link_head)
    dz = -cfg.link_length * np.sin(link_pitch)

    xs = pose.x + np.concatenate([[0.0], np.cumsum(dx)])
    ys = pose.y + np.concatenate([[0.0], np.cumsum(dy)])
    zs = pose.z + _settle_base_pitch(np.concatenate([[0.0], np.cumsum(dz)]))
    return np.stack([xs, ys], axis=1), headings, zs


def _settle_base_pitch(zs):
    """Quasi-static base pitch: remove the best-fit linear trend of the
    backbone elevations.

    The pitch-joint chain carries a phase-dependent net tilt an order of
    magnitude larger than the undulation itself; a floating base pitches
    freely, so the body settles with zero mean slope and only the wave
    shape remains.  Works on (N,) or batched (M, N) elevations.
    """
    zs = np.asarray(zs, dtype=float)
    n = zs.shape[-1]
    k = np.arange(n) - (n - 1) / 2.0
    slope = zs @ k / (k @ k)
    mean = zs.mean(axis=-1)
    if zs.ndim == 1:
        return zs - mean - slope * k
    return zs - mean[..., None] - slope[..., None] * k


def foot_positions(cfg: RobotConfig, frames, shoulders, in_swing):
    """World foot points (2N, 3); index order: left legs 1..N, right 1..N.

    The hip sits hip_half_width to the segment's side; the foot is offset
    from the hip by leg_length*(sin(theta) along heading, cos(theta)
    laterally outward).
    """
    positions, headings, elevations = frames
    n = cfg.n_pairs
    shoulders = np.asarray(shoulders, dtype=float)
    in_swing = np.asarray(in_swing, dtype=bool)
    if shoulders.shape != (2 * n,) or in_swing.shape != (2 * n,):
        raise ConfigurationError(f"expected {2 * n} shoulder angles and swing flags")

    fwd = np.stack([np.cos(headings), np.sin(headings)], axis=1)  # (N,2)
    left = np.stack([-np.sin(headings), np.cos(headings)], axis=1)

    out = np.empty((2 * n, 3))
    for s, lat_sign in ((0, 1.0), (1, -1.0)):  # left block, then right block
        sl = slice(s * n, (s + 1) * n)
        th = shoulders[sl]
        hip = positions + lat_sign * cfg.hip_half_width * left
        planar = (
            hip
            + cfg.leg_length * np.sin(th)[:, None] * fwd
            + lat_sign * cfg.leg_length * np.cos(th)[:, None] * left
        )
        z = elevations - cfg.standing_height + np.where(in_swing[sl], cfg.swing_lift, 0.0)
        out[sl, :2] = planar
        out[sl, 2] = z
    return out


_IDENTITY_POSE = BodyPose()


def feet_for_frame(cfg: RobotConfig, pose: BodyPose, frame: JointFrameSample):
    """Foot points for a gait frame at a given pose."""
    frames = backbone_frames(cfg, pose, frame.body_yaw_angles, frame.body_pitch_angles)
    return foot_positions(cfg, frames, frame.shoulder_angles, ~frame.ideal_contact)


def _body_frame_feet_xy(cfg: RobotConfig, p: GaitParams, tau_b: float):
    frame = frame_at(p, tau_b)
    return feet_for_frame(cfg, _IDENTITY_POSE, frame)[:, :2]


def commanded_feet_velocities(cfg: RobotConfig, p: GaitParams, tau_b: float, d_tau: float = 1e-5):
    """Body-frame planar velocity (2N, 2) of every foot, by central difference
    over phase scaled by d(tau_b)/dt = 2*pi / cycle_period."""
    plus = _body_frame_feet_xy(cfg, p, tau_b + d_tau)
    minus = _body_frame_feet_xy(cfg, p, tau_b - d_tau)
    return (plus - minus) / (2.0 * d_tau) * (TWO_PI / p.cycle_period)


def batched_body_feet(cfg: RobotConfig, yaw_joints, pitch_joints, shoulders, in_swing):
    """Vectorized body-frame feet over a batch of M frames.

    Inputs are (M, N-1) joint arrays and (M, 2N) shoulder/swing arrays;
    returns planar positions (M, 2N, 2) and heights (M, 2N) relative to a
    zero pose.  Must agree with foot_positions(backbone_frames(...)).
    """
    yaw_joints = np.asarray(yaw_joints, dtype=float)
    pitch_joints = np.asarray(pitch_joints, dtype=float)
    shoulders = np.asarray(shoulders, dtype=float)
    in_swing = np.asarray(in_swing, dtype=bool)
    m, n = yaw_joints.shape[0], cfg.n_pairs
    zeros = np.zeros((m, 1))

    headings = np.concatenate([zeros, np.cumsum(yaw_joints, axis=1)], axis=1)  # (M,N)
    cum_pitch = np.concatenate([zeros, np.cumsum(pitch_joints, axis=1)], axis=1)
    lh, lp = headings[:, :-1], cum_pitch[:, :-1]
    xs = np.concatenate([zeros, np.cumsum(cfg.link_length * np.cos(lh), axis=1)], axis=1)
    ys = np.concatenate([zeros, np.cumsum(cfg.link_length * np.sin(lh), axis=1)], axis=1)
    zs = _settle_base_pitch(np.concatenate([zeros, np.cumsum(-cfg.link_length * np.sin(lp), axis=1)], axis=1))

    fwd = np.stack([np.cos(headings), np.sin(headings)], axis=2)  # (M,N,2)
    left = np.stack([-np.sin(headings), np.cos(headings)], axis=2)
    pos = np.stack([xs, ys], axis=2)

    xy = np.empty((m, 2 * n, 2))
    z = np.empty((m, 2 * n))
    for s, lat in ((0, 1.0), (1, -1.0)):
        sl = slice(s * n, (s + 1) * n)
        th = shoulders[:, sl]
        hip = pos + lat * cfg.hip_half_width * left
        xy[:, sl, :] = (
            hip
            + cfg.leg_length * np.sin(th)[:, :, None] * fwd
            + lat * cfg.leg_length * np.cos(th)[:, :, None] * left
        )
        z[:, sl] = zs - cfg.standing_height + np.where(in_swing[:, sl], cfg.swing_lift, 0.0)
    return xy, z


def commanded_foot_velocity(cfg: RobotConfig, p: GaitParams, tau_b: float, i: int, side: str):
    """Body-frame planar velocity of one foot; the leg must be in ideal stance."""
    tau_c = coordinate_phases(tau_b, p).tau_c
    if not bool(ideal_contact(p, tau_c, i, side)):
        raise ContractViolationError(f"leg ({i}, {side}) is not in ideal stance at tau_b={tau_b}")
    vels = commanded_feet_velocities(cfg, p, tau_b)
    idx = (i - 1) if side == "left" else cfg.n_pairs + (i - 1)
    return vels[idx]
