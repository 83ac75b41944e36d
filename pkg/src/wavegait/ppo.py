"""From-scratch PPO over the one-cycle amplitude-coordination MDP.

The environment step is one full motion cycle: the agent picks the three
wave amplitudes, the simulator runs a cycle, and the reward trades forward
progress against lateral drift.  Terrain roughness is redrawn every
``resample_every`` steps during training.

RNG streams (all derived from the config seed via SeedSequence spawn keys):
31 policy init, 37 action noise, 41 minibatch shuffling, 43 terrain seeds,
plus the terrain module's own schedule stream for sigma redraws.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .control import (
    A_V_BOUNDS,
    BODY_BOUNDS,
    LEG_BOUNDS,
    AmplitudeCommand,
    Observation,
    normalize_observation,
    squash_action,
)
from .errors import CheckpointError, ConfigurationError, StatisticsError
from .gait import GaitParams
from .kinematics import BodyPose, RobotConfig
from .nets import Adam, init_mlp, mlp_backward, mlp_forward
from .simulate import SimState, run_cycle
from .terrain import generate_rl_terrain, resample_schedule, schedule_rng

OBS_DIM = 4
ACT_DIM = 3
LOG_STD_MIN, LOG_STD_MAX = -5.0, 2.0
CHECKPOINT_VERSION = 1

_INIT_STREAM = 31
_NOISE_STREAM = 37
_SHUFFLE_STREAM = 41
_TERRAIN_SEED_STREAM = 43

DEFAULT_START_COMMAND = AmplitudeCommand(
    a_v=0.0, theta_body_amp=math.radians(10.0), theta_leg_amp=math.radians(30.0)
)


def _presquash(command: AmplitudeCommand) -> np.ndarray:
    """Pre-squash (atanh) coordinates of a command; values on the box
    boundary are pulled just inside so the result stays finite."""
    vals = (command.a_v, command.theta_body_amp, command.theta_leg_amp)
    out = np.empty(ACT_DIM)
    for k, (v, (lo, hi)) in enumerate(zip(vals, (A_V_BOUNDS, BODY_BOUNDS, LEG_BOUNDS))):
        z = 2.0 * (v - lo) / (hi - lo) - 1.0
        out[k] = math.atanh(min(max(z, -0.999), 0.999))
    return out


def _stream(seed: int, key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(key,)))


@dataclass
class TrainConfig:
    gamma: float = 0.99
    clip_eps: float = 0.2
    gae_lambda: float = 0.95
    learning_rate: float = 3e-4
    epochs_per_update: int = 10
    minibatch_size: int = 64
    horizon: int = 256
    total_updates: int = 200
    resample_every: int = 16
    sigma_range: tuple[float, float] = (2.0, 8.0)
    seed: int = 0
    episode_cycles: int = 32
    k_substeps: int = 64
    value_coeff: float = 0.5
    entropy_coeff: float = 0.01
    hidden_sizes: tuple[int, ...] = (64, 64)
    log_std_init: float = -0.7

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ConfigurationError("gamma must lie in (0, 1)")
        if self.clip_eps <= 0:
            raise ConfigurationError("clip_eps must be positive")


@dataclass
class PolicyParams:
    """Gaussian policy and value MLPs plus the learnable log-std."""

    policy_layers: list
    value_layers: list
    log_std: np.ndarray
    hidden_sizes: tuple[int, ...] = (64, 64)

    @staticmethod
    def init(cfg: TrainConfig) -> "PolicyParams":
        rng = _stream(cfg.seed, _INIT_STREAM)
        sizes = [OBS_DIM, *cfg.hidden_sizes, ACT_DIM]
        vsizes = [OBS_DIM, *cfg.hidden_sizes, 1]
        policy = init_mlp(sizes, rng, out_scale=0.01)
        # start the policy mean at the nominal open-loop command so the
        # update budget is spent improving on it, not rediscovering it
        w_out, b_out = policy[-1]
        b_out[:] = _presquash(DEFAULT_START_COMMAND)
        policy[-1] = (w_out, b_out)
        return PolicyParams(
            policy_layers=policy,
            value_layers=init_mlp(vsizes, rng),
            log_std=np.full(ACT_DIM, cfg.log_std_init),
            hidden_sizes=tuple(cfg.hidden_sizes),
        )

    def as_dict(self) -> dict:
        d = {}
        for tag, layers in (("p", self.policy_layers), ("v", self.value_layers)):
            for k, (w, b) in enumerate(layers):
                d[f"{tag}{k}.w"] = w
                d[f"{tag}{k}.b"] = b
        d["log_std"] = self.log_std
        return d


def save_checkpoint(path, params: PolicyParams, meta: dict | None = None):
    doc = {
        "version": CHECKPOINT_VERSION,
        "layer_sizes": {
            "policy": [OBS_DIM, *params.hidden_sizes, ACT_DIM],
            "value": [OBS_DIM, *params.hidden_sizes, 1],
        },
        "weights": {
            "policy": [w.tolist() for w, _ in params.policy_layers],
            "value": [w.tolist() for w, _ in params.value_layers],
        },
        "biases": {
            "policy": [b.tolist() for _, b in params.policy_layers],
            "value": [b.tolist() for _, b in params.value_layers],
        },
        "log_std": params.log_std.tolist(),
        "obs_normalizer": {
            "kind": "fixed_range",
            "note": "amplitudes and beta mapped onto [-1, 1] by their command bounds",
        },
        "meta": meta or {},
    }
    with open(path, "w") as f:
        json.dump(doc, f)


def load_checkpoint(path) -> PolicyParams:
    try:
        with open(path) as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"checkpoint version {doc.get('version')} != supported {CHECKPOINT_VERSION}"
        )
    policy = [
        (np.asarray(w, dtype=float), np.asarray(b, dtype=float))
        for w, b in zip(doc["weights"]["policy"], doc["biases"]["policy"])
    ]
    value = [
        (np.asarray(w, dtype=float), np.asarray(b, dtype=float))
        for w, b in zip(doc["weights"]["value"], doc["biases"]["value"])
    ]
    hidden = tuple(doc["layer_sizes"]["policy"][1:-1])
    return PolicyParams(
        policy_layers=policy,
        value_layers=value,
        log_std=np.asarray(doc["log_std"], dtype=float),
        hidden_sizes=hidden,
    )


# --- MDP pieces -------------------------------------------------------------


def reward(v_f: float, v_l: float) -> float:
    """Forward progress minus a 0.6-weighted lateral drift penalty."""
    return v_f - 0.6 * abs(v_l)


class WaveEnv:
    """One-cycle MDP over a seeded rough terrain strip.

    Episodes end after ``episode_cycles`` cycles or when the robot leaves
    the field.  ``set_sigma`` regenerates the terrain (fresh stretch) and
    restarts the robot at the start pose; the trainer calls it from the
    domain-randomization schedule.
    """

    def __init__(
        self,
        robot: RobotConfig,
        gait_base: GaitParams,
        seed: int = 0,
        sigma_cm: float = 4.0,
        episode_cycles: int = 32,
        k_substeps: int = 64,
        width: float = 10.0,
        length: float = 3.0,
        start_command: AmplitudeCommand = DEFAULT_START_COMMAND,
    ):
        self.robot = robot
        self.gait_base = gait_base
        self.episode_cycles = episode_cycles
        self.k_substeps = k_substeps
        self.width = width
        self.length = length
        self.start_command = start_command
        self._terrain_seeds = _stream(seed, _TERRAIN_SEED_STREAM)
        self.sigma_cm = sigma_cm
        self.terrain = None
        self.state = None
        self._regen_terrain()
        self.reset()

    def _start_pose(self) -> BodyPose:
        return BodyPose(x=1.0, y=self.length / 2.0, z=0.0, yaw=0.0)

    def _regen_terrain(self):
        seed = int(self._terrain_seeds.integers(0, 2**31 - 1))
        self.terrain = generate_rl_terrain(self.sigma_cm, self.width, self.length, seed=seed)

    def set_sigma(self, sigma_cm: float):
        self.sigma_cm = float(sigma_cm)
        self._regen_terrain()
        self.state = SimState(pose=self._start_pose())

    def reset(self) -> Observation:
        self.state = SimState(pose=self._start_pose())
        self._last_command = self.start_command
        return Observation(
            a_v=self.start_command.a_v,
            theta_body_amp=self.start_command.theta_body_amp,
            theta_leg_amp=self.start_command.theta_leg_amp,
            beta=1.0,
        )

    def step(self, command: AmplitudeCommand):
        """Apply the amplitudes for one full cycle."""
        gait = replace(
            self.gait_base,
            a_v=command.a_v,
            theta_body_amp=command.theta_body_amp,
            theta_leg_amp=command.theta_leg_amp,
        )
        out = run_cycle(self.state, self.robot, gait, self.terrain, self.k_substeps)
        obs = Observation(
            a_v=command.a_v,
            theta_body_amp=command.theta_body_amp,
            theta_leg_amp=command.theta_leg_amp,
            beta=out.beta,
        )
        rew = reward(out.v_f, out.v_l)
        done = out.terminal or self.state.cycle_index >= self.episode_cycles
        self._last_command = command
        return obs, rew, done


def env_step(env: WaveEnv, action: AmplitudeCommand):
    """Spec-level alias for one environment transition."""
    return env.step(action)


# --- PPO math ---------------------------------------------------------------


@dataclass
class RolloutBuffer:
    capacity: int
    observations: np.ndarray = field(init=False)  # normalized features (H,4)
    actions: np.ndarray = field(init=False)  # pre-squash actions (H,3)
    log_probs: np.ndarray = field(init=False)
    rewards: np.ndarray = field(init=False)
    values: np.ndarray = field(init=False)
    dones: np.ndarray = field(init=False)
    size: int = 0

    def __post_init__(self):
        h = self.capacity
        self.observations = np.zeros((h, OBS_DIM))
        self.actions = np.zeros((h, ACT_DIM))
        self.log_probs = np.zeros(h)
        self.rewards = np.zeros(h)
        self.values = np.zeros(h)
        self.dones = np.zeros(h, dtype=bool)

    def add(self, obs, action, log_prob, rew, value, done):
        if self.size >= self.capacity:
            raise ConfigurationError("rollout buffer is full")
        if not np.isfinite(rew):
            raise ConfigurationError("non-finite reward")
        i = self.size
        self.observations[i] = obs
        self.actions[i] = action
        self.log_probs[i] = log_prob
        self.rewards[i] = rew
        self.values[i] = value
        self.dones[i] = done
        self.size += 1

    @property
    def full(self) -> bool:
        return self.size == self.capacity


def gaussian_log_prob(u, mu, log_std):
    """Diagonal-Gaussian log density, summed over action dims."""
    std = np.exp(log_std)
    z = (u - mu) / std
    return -0.5 * np.sum(z * z, axis=-1) - np.sum(log_std) - 0.5 * ACT_DIM * math.log(2.0 * math.pi)


def gaussian_entropy(log_std) -> float:
    return float(np.sum(log_std) + 0.5 * ACT_DIM * (1.0 + math.log(2.0 * math.pi)))


def compute_gae(buffer: RolloutBuffer, gamma: float, lam: float, bootstrap_value: float):
    """Backward GAE recursion; returns (advantages, returns), unnormalized."""
    if buffer.size == 0:
        raise StatisticsError("empty rollout buffer")
    n = buffer.size
    adv = np.zeros(n)
    next_value = bootstrap_value
    acc = 0.0
    for t in range(n - 1, -1, -1):
        not_done = 1.0 - float(buffer.dones[t])
        delta = buffer.rewards[t] + gamma * next_value * not_done - buffer.values[t]
        acc = delta + gamma * lam * not_done * acc
        adv[t] = acc
        next_value = buffer.values[t]
    return adv, adv + buffer.values[:n]


def ppo_loss(log_probs_new, log_probs_old, advantages, clip_eps: float) -> float:
    """Mean clipped surrogate (to maximize)."""
    r = np.exp(np.asarray(log_probs_new) - np.asarray(log_probs_old))
    adv = np.asarray(advantages)
    return float(np.mean(np.minimum(r * adv, np.clip(r, 1.0 - clip_eps, 1.0 + clip_eps) * adv)))


def _objective_and_grads(params: PolicyParams, obs, actions, logp_old, adv, returns, cfg: TrainConfig):
    """Full PPO objective (surrogate - c_v*value_mse + c_e*entropy) and its
    analytic gradients w.r.t. every parameter array."""
    b = obs.shape[0]
    mu, pacts = mlp_forward(params.policy_layers, obs)
    std = np.exp(params.log_std)
    var = std * std
    diff = actions - mu
    logp = gaussian_log_prob(actions, mu, params.log_std)

    ratio = np.exp(logp - logp_old)
    unclipped = ratio * adv
    clipped = np.clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv
    take_raw = unclipped <= clipped
    surrogate = float(np.mean(np.where(take_raw, unclipped, clipped)))

    v_out, vacts = mlp_forward(params.value_layers, obs)
    v_err = v_out[:, 0] - returns
    value_mse = float(np.mean(v_err * v_err))
    entropy = gaussian_entropy(params.log_std)
    objective = surrogate - cfg.value_coeff * value_mse + cfg.entropy_coeff * entropy

    # d(objective)/d(logp); the clipped branch is flat in the parameters
    dlogp = np.where(take_raw, ratio * adv, 0.0) / b
    dmu = dlogp[:, None] * diff / var
    dlog_std = np.sum(dlogp[:, None] * (diff * diff / var - 1.0), axis=0)
    dlog_std = dlog_std + cfg.entropy_coeff
    dv = (-cfg.value_coeff * 2.0 * v_err / b)[:, None]

    pgrads = mlp_backward(params.policy_layers, pacts, dmu)
    vgrads = mlp_backward(params.value_layers, vacts, dv)
    grads = {}
    for tag, gs in (("p", pgrads), ("v", vgrads)):
        for k, (gw, gb) in enumerate(gs):
            grads[f"{tag}{k}.w"] = gw
            grads[f"{tag}{k}.b"] = gb
    grads["log_std"] = dlog_std
    diag = {
        "objective": objective,
        "surrogate": surrogate,
        "value_loss": value_mse,
        "entropy": entropy,
    }
    return objective, grads, diag


def update(
    params: PolicyParams,
    buffer: RolloutBuffer,
    cfg: TrainConfig,
    optimizer: Adam | None = None,
    bootstrap_value: float = 0.0,
    shuffle_rng: np.random.Generator | None = None,
):
    """Run epochs of minibatch Adam ascent on the PPO objective.

    Mutates params in place and returns (params, diagnostics).  Advantages
    are normalized once per update before entering the loss.
    """
    if not buffer.full:
        raise ConfigurationError("rollout buffer must be full before an update")
    if optimizer is None:
        optimizer = Adam(lr=cfg.learning_rate)
    if shuffle_rng is None:
        shuffle_rng = _stream(cfg.seed, _SHUFFLE_STREAM)

    adv, returns = compute_gae(buffer, cfg.gamma, cfg.gae_lambda, bootstrap_value)
    adv_std = float(np.std(adv))
    adv = (adv - np.mean(adv)) / (adv_std + 1e-8)

    n = buffer.size
    pdict = params.as_dict()
    diag = {}
    for _ in range(cfg.epochs_per_update):
        order = shuffle_rng.permutation(n)
        for lo in range(0, n, cfg.minibatch_size):
            idx = order[lo : lo + cfg.minibatch_size]
            objective, grads, diag = _objective_and_grads(
                params,
                buffer.observations[idx],
                buffer.actions[idx],
                buffer.log_probs[idx],
                adv[idx],
                returns[idx],
                cfg,
            )
            if not np.isfinite(objective):
                diag["aborted"] = True
                return params, diag
            optimizer.step(pdict, grads)
            np.clip(params.log_std, LOG_STD_MIN, LOG_STD_MAX, out=params.log_std)
    diag["mean_reward"] = float(np.mean(buffer.rewards[: buffer.size]))
    diag["clip_eps"] = cfg.clip_eps
    diag["gamma"] = cfg.gamma
    return params, diag


# --- training loop ----------------------------------------------------------


def collect_rollout(env: WaveEnv, params: PolicyParams, cfg: TrainConfig, obs, noise_rng, sched_rng, global_step):
    """Fill one horizon-length buffer; returns (buffer, last_obs, bootstrap,
    global_step, sigma_current)."""
    buf = RolloutBuffer(cfg.horizon)
    sigma_current = env.sigma_cm
    std = np.exp(params.log_std)
    while not buf.full:
        sig = resample_schedule(global_step, sched_rng, cfg.resample_every, cfg.sigma_range)
        if sig is not None:
            env.set_sigma(sig)
            obs = env.reset()
            sigma_current = sig
        feats = normalize_observation(obs)
        mu, _ = mlp_forward(params.policy_layers, feats[None, :])
        mu = mu[0]
        u = mu + std * noise_rng.standard_normal(ACT_DIM)
        logp = float(gaussian_log_prob(u, mu, params.log_std))
        value = float(mlp_forward(params.value_layers, feats[None, :])[0][0, 0])
        command = squash_action(u)
        next_obs, rew, done = env.step(command)
        buf.add(feats, u, logp, rew, value, done)
        obs = env.reset() if done else next_obs
        global_step += 1
    last_feats = normalize_observation(obs)
    if buf.dones[buf.size - 1]:
        bootstrap = 0.0
    else:
        bootstrap = float(mlp_forward(params.value_layers, last_feats[None, :])[0][0, 0])
    return buf, obs, bootstrap, global_step, sigma_current


CURVE_HEADER = ["update", "mean_reward", "surrogate", "value_loss", "entropy", "sigma_current"]


def train(
    cfg: TrainConfig,
    robot: RobotConfig | None = None,
    gait_base: GaitParams | None = None,
    out_dir: str | None = None,
    progress=None,
):
    """Full PPO training run; returns (params, curve_rows).

    Writes curve.csv and checkpoint.json to out_dir when given.  Fully
    reproducible from cfg.seed.
    """
    robot = robot or RobotConfig()
    gait_base = gait_base or GaitParams(theta_leg_amp=math.radians(30.0))
    params = PolicyParams.init(cfg)
    optimizer = Adam(lr=cfg.learning_rate)
    noise_rng = _stream(cfg.seed, _NOISE_STREAM)
    shuffle_rng = _stream(cfg.seed, _SHUFFLE_STREAM)
    sched_rng = schedule_rng(cfg.seed)
    env = WaveEnv(
        robot,
        gait_base,
        seed=cfg.seed,
        sigma_cm=cfg.sigma_range[0],
        episode_cycles=cfg.episode_cycles,
        k_substeps=cfg.k_substeps,
    )
    obs = env.reset()
    global_step = 0
    rows = []
    for upd in range(cfg.total_updates):
        buf, obs, bootstrap, global_step, sigma_current = collect_rollout(
            env, params, cfg, obs, noise_rng, sched_rng, global_step
        )
        params, diag = update(params, buf, cfg, optimizer, bootstrap, shuffle_rng)
        rows.append(
            [
                upd,
                diag.get("mean_reward", float("nan")),
                diag["surrogate"],
                diag["value_loss"],
                diag["entropy"],
                sigma_current,
            ]
        )
        if progress is not None:
            progress(upd, rows[-1])
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "curve.csv"), "w") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(CURVE_HEADER)
            w.writerows(rows)
        save_checkpoint(
            os.path.join(out_dir, "checkpoint.json"),
            params,
            meta={"seed": cfg.seed, "total_updates": cfg.total_updates},
        )
    return params, rows
