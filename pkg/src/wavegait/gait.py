"""Three traveling waves that define the gait.

All phases are radians and all angles are radians.  Leg indices run 1..N
(pairs), body joint indices 1..N-1.  `side` is "left" or "right"; the right
leg of a pair is the left leg advanced by pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

TWO_PI = 2.0 * math.pi

LEFT = "left"
RIGHT = "right"


@dataclass(frozen=True)
class GaitParams:
    """Amplitudes and constants of the three gait waves.

    theta_leg_amp  shoulder-angle amplitude (rad)
    theta_body_amp lateral (yaw) body-wave amplitude (rad)
    a_v            vertical (pitch) body-wave amplitude (rad)
    xi             spatial wave number (same for body and legs)
    duty           stance fraction of the cycle, in (0, 1)
    n_pairs        number of leg pairs N (one body module per pair)
    cycle_period   duration of one 2*pi phase advance (s)
    """

    theta_leg_amp: float
    theta_body_amp: float = 0.0
    a_v: float = 0.0
    xi: float = 1.0
    duty: float = 0.5
    n_pairs: int = 8
    cycle_period: float = 3.0

    def __post_init__(self):
        if self.theta_leg_amp < 0 or self.theta_body_amp < 0 or self.a_v < 0:
            raise ConfigurationError("wave amplitudes must be >= 0")
        if not 0.0 < self.duty < 1.0:
            raise ConfigurationError("duty factor must lie strictly in (0, 1)")
        if self.n_pairs < 2:
            raise ConfigurationError("need at least 2 leg pairs")
        if self.cycle_period <= 0:
            raise ConfigurationError("cycle_period must be positive")
        if self.xi <= 0:
            raise ConfigurationError("spatial wave number must be positive")


@dataclass(frozen=True)
class GaitPhase:
    tau_b: float
    tau_c: float


@dataclass(frozen=True)
class JointFrameSample:
    """All joint targets and ideal contact flags at one phase.

    shoulder_angles has 2N entries (left legs 1..N, then right legs 1..N);
    body arrays have N-1 entries; ideal_contact matches shoulder ordering.
    """

    tau_b: float
    shoulder_angles: np.ndarray
    body_yaw_angles: np.ndarray
    body_pitch_angles: np.ndarray
    ideal_contact: np.ndarray


def _leg_wave(amp, duty, tau):
    """Piecewise sinusoid: stance branch amp*cos(t/2D), swing branch mirrored."""
    t = np.mod(tau, TWO_PI)
    stance = t < TWO_PI * duty
    return np.where(
        stance,
        amp * np.cos(t / (2.0 * duty)),
        -amp * np.cos((t - TWO_PI * duty) / (2.0 * (1.0 - duty))),
    )


def _leg_phase_shift(p: GaitParams, i, side):
    shift = -TWO_PI * (p.xi / p.n_pairs) * (np.asarray(i) - 1)
    if side == RIGHT:
        shift = shift + math.pi
    elif side != LEFT:
        raise ConfigurationError(f"side must be 'left' or 'right', got {side!r}")
    return shift


def _check_leg_index(p: GaitParams, i):
    if np.any(np.asarray(i) < 1) or np.any(np.asarray(i) > p.n_pairs):
        raise IndexError(f"leg index {i} outside 1..{p.n_pairs}")


def _check_joint_index(p: GaitParams, j):
    if np.any(np.asarray(j) < 1) or np.any(np.asarray(j) > p.n_pairs - 1):
        raise IndexError(f"body joint index {j} outside 1..{p.n_pairs - 1}")


def leg_shoulder_angle(p: GaitParams, tau_c, i, side=LEFT):
    """Shoulder angle of leg i at contact phase tau_c."""
    _check_leg_index(p, i)
    return _leg_wave(p.theta_leg_amp, p.duty, np.asarray(tau_c) + _leg_phase_shift(p, i, side))


def horizontal_body_angle(p: GaitParams, tau_b, j):
    """Yaw angle of body joint j: a head-to-tail lateral wave."""
    _check_joint_index(p, j)
    return p.theta_body_amp * np.cos(np.asarray(tau_b) - TWO_PI * (p.xi / p.n_pairs) * (np.asarray(j) - 1))


def vertical_body_angle(p: GaitParams, tau_b, j):
    """Pitch angle of body joint j; twice the temporal and spatial frequency."""
    _check_joint_index(p, j)
    return p.a_v * np.cos(2.0 * np.asarray(tau_b) - 2.0 * TWO_PI * (p.xi / p.n_pairs) * (np.asarray(j) - 1))


def coordinate_phases(tau_b: float, p: GaitParams) -> GaitPhase:
    """Contact phase that gives effective leg retraction for a given body phase."""
    tau_c = tau_b - (p.xi / p.n_pairs + 0.5) * math.pi
    return GaitPhase(tau_b=tau_b, tau_c=tau_c)


def ideal_contact(p: GaitParams, tau_c, i, side=LEFT):
    """True while leg i is in the stance branch of the leg wave."""
    _check_leg_index(p, i)
    t = np.mod(np.asarray(tau_c) + _leg_phase_shift(p, i, side), TWO_PI)
    return t < TWO_PI * p.duty


def frame_at(p: GaitParams, tau_b: float) -> JointFrameSample:
    """Evaluate all waves at one body phase."""
    n = p.n_pairs
    legs = np.arange(1, n + 1)
    joints = np.arange(1, n)
    tau_c = coordinate_phases(tau_b, p).tau_c

    shoulders = np.concatenate(
        [
            leg_shoulder_angle(p, tau_c, legs, LEFT),
            leg_shoulder_angle(p, tau_c, legs, RIGHT),
        ]
    )
    contact = np.concatenate(
        [
            ideal_contact(p, tau_c, legs, LEFT),
            ideal_contact(p, tau_c, legs, RIGHT),
        ]
    )
    return JointFrameSample(
        tau_b=tau_b,
        shoulder_angles=shoulders,
        body_yaw_angles=np.asarray(horizontal_body_angle(p, tau_b, joints), dtype=float),
        body_pitch_angles=np.asarray(vertical_body_angle(p, tau_b, joints), dtype=float),
        ideal_contact=contact,
    )


def sample_cycle(p: GaitParams, k_substeps: int, tau_b0: float = 0.0) -> list[JointFrameSample]:
    """Uniformly sample one full cycle tau_b in [tau_b0, tau_b0 + 2*pi)."""
    if k_substeps < 8:
        raise ConfigurationError("k_substeps must be >= 8")
    return [frame_at(p, tau_b0 + TWO_PI * s / k_substeps) for s in range(k_substeps)]


def batched_frames(p: GaitParams, tau_b):
    """Vectorized frame_at over a phase array (M,).

    Returns (shoulders (M,2N), yaw (M,N-1), pitch (M,N-1), contact (M,2N)).
    Used by the simulator's hot path; must agree with frame_at exactly.
    """
    tau_b = np.asarray(tau_b, dtype=float)
    n = p.n_pairs
    legs = np.arange(1, n + 1)
    joints = np.arange(1, n)
    tau_c = tau_b - (p.xi / n + 0.5) * math.pi

    shift = -TWO_PI * (p.xi / n) * (legs - 1)
    tl = tau_c[:, None] + shift[None, :]
    tr = tl + math.pi
    shoulders = np.concatenate(
        [_leg_wave(p.theta_leg_amp, p.duty, tl), _leg_wave(p.theta_leg_amp, p.duty, tr)], axis=1
    )
    contact = np.concatenate(
        [np.mod(tl, TWO_PI) < TWO_PI * p.duty, np.mod(tr, TWO_PI) < TWO_PI * p.duty], axis=1
    )
    joint_shift = TWO_PI * (p.xi / n) * (joints - 1)
    yaw = p.theta_body_amp * np.cos(tau_b[:, None] - joint_shift[None, :])
    pitch = p.a_v * np.cos(2.0 * tau_b[:, None] - 2.0 * joint_shift[None, :])
    return shoulders, yaw, pitch, contact
