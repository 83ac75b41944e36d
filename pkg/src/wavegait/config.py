"""Experiment configuration: one YAML document describing robot, gait,
controller, terrain, and run bookkeeping.

Angles cross this boundary in degrees (human-editable) and are converted to
radians at load time.  The resolved configuration is embedded verbatim in
every output file so results are self-describing.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, replace

import yaml

from .control import (
    AmplitudeCommand,
    LinearGain,
    Observation,
    linear_next,
    open_loop_next,
    policy_next,
)
from .errors import ConfigurationError
from .gait import GaitParams
from .kinematics import RobotConfig
from .terrain import (
    HeightField,
    generate_block_terrain,
    generate_flat_terrain,
    generate_rl_terrain,
)

OUT_DIR_ENV = "WAVEGAIT_OUT_DIR"

CONTROLLER_KINDS = ("open_loop", "linear", "policy")
TERRAIN_KINDS = ("flat", "blocks", "rl")

DEFAULT_GAIT = {
    "theta_leg_deg": 30.0,
    "theta_body_deg": 10.0,
    "a_v_deg": 0.0,
    "xi": 1.0,
    "duty": 0.5,
    "n_pairs": 8,
    "cycle_period_s": 3.0,
}


@dataclass(frozen=True)
class ControllerSpec:
    kind: str = "open_loop"
    k_p_deg: float = -50.0
    beta_0: float = 0.9
    checkpoint: str | None = None

    def __post_init__(self):
        if self.kind not in CONTROLLER_KINDS:
            raise ConfigurationError(
                f"controller kind {self.kind!r} not one of {CONTROLLER_KINDS}"
            )
        if self.kind == "policy" and not self.checkpoint:
            raise ConfigurationError("policy controller needs a checkpoint path")


@dataclass(frozen=True)
class TerrainSpec:
    kind: str = "flat"
    rugosity: float = 0.0  # blocks terrain
    sigma_cm: float = 4.0  # rl terrain
    width: float = 10.0
    length: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in TERRAIN_KINDS:
            raise ConfigurationError(f"terrain kind {self.kind!r} not one of {TERRAIN_KINDS}")


@dataclass(frozen=True)
class ExperimentConfig:
    robot: RobotConfig = field(default_factory=RobotConfig)
    gait: GaitParams = field(
        default_factory=lambda: GaitParams(
            theta_leg_amp=math.radians(30.0), theta_body_amp=math.radians(10.0)
        )
    )
    controller: ControllerSpec = field(default_factory=ControllerSpec)
    terrain: TerrainSpec = field(default_factory=TerrainSpec)
    cycles: int = 8
    seed: int = 0
    out_dir: str = "results"

    def __post_init__(self):
        if self.cycles < 0:
            raise ConfigurationError("cycles must be >= 0")


def default_out_dir() -> str:
    return os.environ.get(OUT_DIR_ENV, "results")


def _only_keys(section: dict, allowed, where: str) -> None:
    extra = set(section) - set(allowed)
    if extra:
        raise ConfigurationError(f"unknown key(s) {sorted(extra)} in {where}")


def _gait_from_dict(d: dict) -> GaitParams:
    merged = {**DEFAULT_GAIT, **d}
    _only_keys(merged, DEFAULT_GAIT, "gait")
    return GaitParams(
        theta_leg_amp=math.radians(float(merged["theta_leg_deg"])),
        theta_body_amp=math.radians(float(merged["theta_body_deg"])),
        a_v=math.radians(float(merged["a_v_deg"])),
        xi=float(merged["xi"]),
        duty=float(merged["duty"]),
        n_pairs=int(merged["n_pairs"]),
        cycle_period=float(merged["cycle_period_s"]),
    )


def config_from_dict(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigurationError("config document must be a mapping")
    _only_keys(
        doc,
        ("robot", "gait", "controller", "terrain", "cycles", "seed", "out_dir"),
        "config",
    )
    robot_d = doc.get("robot", {}) or {}
    try:
        robot = RobotConfig(**robot_d)
    except TypeError as exc:
        raise ConfigurationError(f"bad robot section: {exc}") from exc

    gait = _gait_from_dict(doc.get("gait", {}) or {})
    if gait.n_pairs != robot.n_pairs:
        # the gait wave and the body share N; keep them in lock-step
        robot = replace(robot, n_pairs=gait.n_pairs)

    ctrl_d = dict(doc.get("controller", {}) or {})
    _only_keys(ctrl_d, ("kind", "k_p_deg", "beta_0", "checkpoint"), "controller")
    controller = ControllerSpec(**ctrl_d)
    if controller.kind == "policy" and not os.path.exists(controller.checkpoint):
        raise ConfigurationError(f"checkpoint not found: {controller.checkpoint}")

    terr_d = dict(doc.get("terrain", {}) or {})
    _only_keys(terr_d, ("kind", "rugosity", "sigma_cm", "width", "length", "seed"), "terrain")
    terrain = TerrainSpec(**terr_d)

    return ExperimentConfig(
        robot=robot,
        gait=gait,
        controller=controller,
        terrain=terrain,
        cycles=int(doc.get("cycles", 8)),
        seed=int(doc.get("seed", 0)),
        out_dir=str(doc.get("out_dir", default_out_dir())),
    )


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as f:
            doc = yaml.safe_load(f) or {}
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"malformed YAML in {path}: {exc}") from exc
    return config_from_dict(doc)


def resolved_dict(cfg: ExperimentConfig) -> dict:
    """Plain JSON-able mirror of the full configuration (angles back in deg)."""
    g = cfg.gait
    return {
        "robot": asdict(cfg.robot),
        "gait": {
            "theta_leg_deg": math.degrees(g.theta_leg_amp),
            "theta_body_deg": math.degrees(g.theta_body_amp),
            "a_v_deg": math.degrees(g.a_v),
            "xi": g.xi,
            "duty": g.duty,
            "n_pairs": g.n_pairs,
            "cycle_period_s": g.cycle_period,
        },
        "controller": asdict(cfg.controller),
        "terrain": asdict(cfg.terrain),
        "cycles": cfg.cycles,
        "seed": cfg.seed,
        "out_dir": cfg.out_dir,
    }


def resolved_json(cfg: ExperimentConfig) -> str:
    return json.dumps(resolved_dict(cfg), sort_keys=True)


def build_terrain(spec: TerrainSpec) -> HeightField:
    if spec.kind == "flat":
        return generate_flat_terrain(spec.width, spec.length)
    if spec.kind == "blocks":
        return generate_block_terrain(spec.rugosity, spec.width, spec.length, seed=spec.seed)
    return generate_rl_terrain(spec.sigma_cm, spec.width, spec.length, seed=spec.seed)


def build_controller(cfg: ExperimentConfig):
    """Return step(obs) -> AmplitudeCommand for the configured controller."""
    g = cfg.gait
    if cfg.controller.kind == "open_loop":
        fixed = AmplitudeCommand(
            a_v=g.a_v, theta_body_amp=g.theta_body_amp, theta_leg_amp=g.theta_leg_amp
        )
        return lambda obs: open_loop_next(fixed, obs)
    if cfg.controller.kind == "linear":
        gain = LinearGain(k_p=math.radians(cfg.controller.k_p_deg), beta_0=cfg.controller.beta_0)
        return lambda obs: linear_next(gain, obs)
    from .ppo import load_checkpoint  # deferred: policy runs don't always need it

    params = load_checkpoint(cfg.controller.checkpoint)
    return lambda obs: policy_next(params, obs, deterministic=True)


def initial_observation(cfg: ExperimentConfig) -> Observation:
    g = cfg.gait
    return Observation(
        a_v=g.a_v, theta_body_amp=g.theta_body_amp, theta_leg_amp=g.theta_leg_amp, beta=1.0
    )
