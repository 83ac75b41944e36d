"""Cycle-boundary amplitude controllers: open-loop, linear, and policy.

Each controller maps the previous cycle's Observation (current amplitudes
plus measured contact ratio) to the amplitudes used for the next cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

# Command bounds (rad)
A_V_BOUNDS = (0.0, math.radians(35.0))
BODY_BOUNDS = (0.0, math.radians(25.0))
LEG_BOUNDS = (math.radians(5.0), math.radians(35.0))


@dataclass(frozen=True)
class Observation:
    a_v: float
    theta_body_amp: float
    theta_leg_amp: float
    beta: float

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigurationError("beta must lie in [0, 1]")

    def as_array(self) -> np.ndarray:
        return np.array([self.a_v, self.theta_body_amp, self.theta_leg_amp, self.beta])


@dataclass(frozen=True)
class AmplitudeCommand:
    a_v: float
    theta_body_amp: float
    theta_leg_amp: float

    def __post_init__(self):
        for name, val, (lo, hi) in (
            ("a_v", self.a_v, A_V_BOUNDS),
            ("theta_body_amp", self.theta_body_amp, BODY_BOUNDS),
            ("theta_leg_amp", self.theta_leg_amp, LEG_BOUNDS),
        ):
            if not lo - 1e-12 <= val <= hi + 1e-12:
                raise ConfigurationError(
                    f"{name}={math.degrees(val):.2f} deg outside [{math.degrees(lo)}, {math.degrees(hi)}] deg"
                )


@dataclass(frozen=True)
class LinearGain:
    """Proportional feedback on the contact-ratio error.

    The vertical amplitude grows as beta drops below beta_0, so the default
    gain is negative.
    """

    k_p: float = math.radians(-50.0)
    beta_0: float = 0.9
    a_v_bounds: tuple[float, float] = A_V_BOUNDS

    def __post_init__(self):
        if not 0.0 < self.beta_0 <= 1.0:
            raise ConfigurationError("beta_0 must lie in (0, 1]")


def open_loop_next(fixed: AmplitudeCommand, obs: Observation) -> AmplitudeCommand:
    """Ignore the observation; replay the fixed command."""
    return fixed


def linear_next(g: LinearGain, obs: Observation) -> AmplitudeCommand:
    """a_v = clamp(k_p * (beta - beta_0)); leg and body amplitudes unchanged."""
    lo, hi = g.a_v_bounds
    a_v = min(max(g.k_p * (obs.beta - g.beta_0), lo), hi)
    return AmplitudeCommand(
        a_v=a_v,
        theta_body_amp=obs.theta_body_amp,
        theta_leg_amp=obs.theta_leg_amp,
    )


# --- policy controller -----------------------------------------------------

_BOUNDS = (A_V_BOUNDS, BODY_BOUNDS, LEG_BOUNDS)


def normalize_observation(obs: Observation) -> np.ndarray:
    """Map each amplitude and beta onto [-1, 1].  Applied exactly once, inside
    the policy forward pass."""
    feats = np.empty(4)
    raw = (obs.a_v, obs.theta_body_amp, obs.theta_leg_amp)
    for k, ((lo, hi), v) in enumerate(zip(_BOUNDS, raw)):
        feats[k] = 2.0 * (v - lo) / (hi - lo) - 1.0
    feats[3] = 2.0 * obs.beta - 1.0
    return feats


def squash_action(u) -> AmplitudeCommand:
    """tanh-squash an unbounded 3-vector onto the command box."""
    u = np.asarray(u, dtype=float)
    vals = []
    for k, (lo, hi) in enumerate(_BOUNDS):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        vals.append(mid + half * math.tanh(u[k]))
    return AmplitudeCommand(a_v=vals[0], theta_body_amp=vals[1], theta_leg_amp=vals[2])


def policy_next(params, obs: Observation, deterministic: bool = True, rng=None) -> AmplitudeCommand:
    """One forward pass of the Gaussian policy; mean in deterministic mode."""
    from .nets import mlp_forward  # local import to keep the module layerings flat

    x = normalize_observation(obs)
    mu, _ = mlp_forward(params.policy_layers, x[None, :])
    mu = mu[0]
    if deterministic:
        return squash_action(mu)
    if rng is None:
        raise ConfigurationError("stochastic policy_next needs an rng")
    u = mu + np.exp(params.log_std) * rng.standard_normal(3)
    return squash_action(u)
