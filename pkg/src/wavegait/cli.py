"""Command-line front door: gen-terrain, run, sweep, train, eval.

Exit codes: 0 success, 2 usage, 3 configuration, 4 runtime.  Every CSV
embeds the resolved configuration as '#'-prefixed comment lines above the
header, so re-running a command with identical inputs reproduces the file
byte for byte; wall-clock metadata goes to a .meta.json sidecar instead.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .config import (
    ExperimentConfig,
    TerrainSpec,
    build_controller,
    build_terrain,
    config_from_dict,
    default_out_dir,
    initial_observation,
    load_config,
    resolved_dict,
)
from .control import Observation
from .errors import ConfigurationError, CheckpointError, WavegaitError
from .kinematics import BodyPose
from .ppo import CURVE_HEADER, TrainConfig, load_checkpoint, reward, save_checkpoint, train
from .simulate import SimState, run_cycle
from .terrain import generate_block_terrain, generate_flat_terrain, generate_rl_terrain

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_RUNTIME = 4


class UsageError(Exception):
    """Bad command-line arguments caught after argparse (maps to exit 2)."""

RUN_HEADER = ["cycle_index", "v_f", "v_l", "beta", "dx", "dy"]
SWEEP_HEADER = ["a_v_deg", "terrain", "seed", "v_f_bar", "beta_bar", "status"]
EVAL_HEADER = ["controller", "sigma_cm", "mean_v_f", "ci95_v_f", "mean_reward", "mean_beta", "runs"]


def _write_csv(path, header, rows, config_comment: str):
    with open(path, "w", newline="") as f:
        f.write(f"# config: {config_comment}\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


def _write_meta(path, command: str, config: dict):
    with open(path, "w") as f:
        json.dump({"command": command, "config": config, "written_at": time.time()}, f, indent=2)


def _start_state(spec: TerrainSpec) -> SimState:
    return SimState(pose=BodyPose(x=1.0, y=spec.length / 2.0, z=0.0, yaw=0.0))


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok != ""]
    except ValueError as exc:
        raise ConfigurationError(f"bad numeric list {text!r}: {exc}") from exc


def _parse_ints(text: str) -> list[int]:
    return [int(v) for v in _parse_floats(text)]


def _parse_size(text: str) -> tuple[float, float]:
    try:
        w, l = text.lower().split("x")
        return float(w), float(l)
    except ValueError as exc:
        raise ConfigurationError(f"size must look like 10x3, got {text!r}") from exc


# --- gen-terrain -------------------------------------------------------------


def cmd_gen_terrain(args) -> int:
    width, length = _parse_size(args.size)
    if args.flat:
        field = generate_flat_terrain(width, length)
        label = "flat"
    elif args.rl_sigma is not None:
        field = generate_rl_terrain(args.rl_sigma, width, length, seed=args.seed)
        label = f"rl sigma={args.rl_sigma:g} cm"
    else:
        if args.rugosity is None:
            raise ConfigurationError("pick one of --rugosity, --rl-sigma, --flat")
        field = generate_block_terrain(args.rugosity, width, length, seed=args.seed)
        label = f"blocks R_g={args.rugosity:g}"
    out = args.out or default_out_dir()
    os.makedirs(out, exist_ok=True)
    cfg_json = json.dumps(
        {"terrain": label, "size": args.size, "seed": args.seed}, sort_keys=True
    )
    with open(os.path.join(out, "terrain.json"), "w") as f:
        f.write(field.to_json())
    with open(os.path.join(out, "terrain.csv"), "w") as f:
        f.write(f"# config: {cfg_json}\n")
        f.write(field.to_csv())
    _write_meta(os.path.join(out, "terrain.meta.json"), "gen-terrain", {"terrain": label})
    if not args.no_figures:
        from .reports import render_terrain

        render_terrain(field, os.path.join(out, "terrain.png"))
    print(f"wrote terrain files to {out}")
    return EXIT_OK


# --- run ---------------------------------------------------------------------


def _config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else config_from_dict({})
    doc = resolved_dict(cfg)
    if args.cycles is not None:
        doc["cycles"] = args.cycles
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.out is not None:
        doc["out_dir"] = args.out
    elif not args.config:
        doc["out_dir"] = default_out_dir()
    if args.controller is not None:
        doc["controller"]["kind"] = args.controller
    if args.checkpoint is not None:
        doc["controller"]["kind"] = "policy"
        doc["controller"]["checkpoint"] = args.checkpoint
    if args.terrain is not None:
        doc["terrain"]["kind"] = args.terrain
    if args.sigma_cm is not None:
        doc["terrain"]["sigma_cm"] = args.sigma_cm
    if args.rugosity is not None:
        doc["terrain"]["rugosity"] = args.rugosity
    if args.terrain_seed is not None:
        doc["terrain"]["seed"] = args.terrain_seed
    return config_from_dict(doc)


def run_experiment(cfg: ExperimentConfig):
    """Run `cycles` cycles with the configured controller; returns
    (rows, summary dict)."""
    terrain = build_terrain(cfg.terrain)
    controller = build_controller(cfg)
    state = _start_state(cfg.terrain)
    obs = initial_observation(cfg)
    rows = []
    for c in range(cfg.cycles):
        command = controller(obs)
        gait = dataclasses.replace(
            cfg.gait,
            a_v=command.a_v,
            theta_body_amp=command.theta_body_amp,
            theta_leg_amp=command.theta_leg_amp,
        )
        out = run_cycle(state, cfg.robot, gait, terrain)
        rows.append([c, out.v_f, out.v_l, out.beta, *out.displacement])
        obs = Observation(
            a_v=command.a_v,
            theta_body_amp=command.theta_body_amp,
            theta_leg_amp=command.theta_leg_amp,
            beta=out.beta,
        )
        if out.terminal:
            break
    arr = np.asarray([r[1:4] for r in rows], dtype=float)
    summary = {
        "cycles_completed": len(rows),
        "v_f_bar": float(np.mean(arr[:, 0])) if len(rows) else 0.0,
        "v_l_bar": float(np.mean(arr[:, 1])) if len(rows) else 0.0,
        "beta_bar": float(np.mean(arr[:, 2])) if len(rows) else 0.0,
        "config": resolved_dict(cfg),
    }
    return rows, summary


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    rows, summary = run_experiment(cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    # the embedded comment identifies the experiment, so the output location
    # (pure bookkeeping) stays out of it: same config + seed -> same bytes
    doc = {k: v for k, v in resolved_dict(cfg).items() if k != "out_dir"}
    _write_csv(os.path.join(cfg.out_dir, "cycles.csv"), RUN_HEADER, rows, json.dumps(doc, sort_keys=True))
    with open(os.path.join(cfg.out_dir, "summary.json"), "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
    _write_meta(os.path.join(cfg.out_dir, "run.meta.json"), "run", resolved_dict(cfg))
    if not args.no_figures and rows:
        from .reports import render_run

        render_run(rows, os.path.join(cfg.out_dir, "cycles.png"))
    print(
        f"v_f_bar={summary['v_f_bar']:.4f} v_l_bar={summary['v_l_bar']:.4f} "
        f"beta_bar={summary['beta_bar']:.4f} ({summary['cycles_completed']} cycles)"
    )
    return EXIT_OK


# --- sweep -------------------------------------------------------------------


def _parse_terrain_token(token: str) -> TerrainSpec:
    if token == "flat":
        return TerrainSpec(kind="flat")
    if token.startswith("rg:"):
        return TerrainSpec(kind="blocks", rugosity=float(token[3:]))
    if token.startswith("sigma:"):
        return TerrainSpec(kind="rl", sigma_cm=float(token[6:]))
    raise ConfigurationError(f"terrain token {token!r}; use flat, rg:<R_g> or sigma:<cm>")


def _sweep_cell(payload):
    """One (a_v, terrain, seed) cell; returns a finished row.  Module-level so
    process pools can pickle it."""
    a_v_deg, token, seed, cycles = payload
    try:
        spec = dataclasses.replace(_parse_terrain_token(token), seed=seed)
        cfg = config_from_dict(
            {
                "gait": {"a_v_deg": a_v_deg},
                "terrain": dataclasses.asdict(spec),
                "cycles": cycles,
                "seed": seed,
            }
        )
        _rows, summary = run_experiment(cfg)
        return [a_v_deg, token, seed, summary["v_f_bar"], summary["beta_bar"], "ok"]
    except WavegaitError as exc:
        return [a_v_deg, token, seed, float("nan"), float("nan"), f"error: {exc}"]


def cmd_sweep(args) -> int:
    a_vs = _parse_floats(args.a_v)
    seeds = _parse_ints(args.seeds)
    tokens = [t for t in args.terrains.split(",") if t]
    if not a_vs or not seeds or not tokens:
        raise UsageError("sweep needs nonempty --a-v, --terrains and --seeds")
    for tok in tokens:
        _parse_terrain_token(tok)  # fail fast on bad grids
    cells = [(a, t, s, args.cycles) for a in a_vs for t in tokens for s in seeds]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(c) for c in cells]
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    out = args.out or default_out_dir()
    os.makedirs(out, exist_ok=True)
    cfg_json = json.dumps(
        {"a_v_deg": a_vs, "terrains": tokens, "seeds": seeds, "cycles": args.cycles},
        sort_keys=True,
    )
    _write_csv(os.path.join(out, "sweep.csv"), SWEEP_HEADER, rows, cfg_json)
    _write_meta(os.path.join(out, "sweep.meta.json"), "sweep", {"cells": len(cells)})
    if not args.no_figures:
        from .reports import render_sweep

        render_sweep(rows, os.path.join(out, "sweep.png"))
    failures = sum(1 for r in rows if r[5] != "ok")
    print(f"swept {len(cells)} cells ({failures} failed) -> {out}/sweep.csv")
    return EXIT_OK


# --- train -------------------------------------------------------------------


def cmd_train(args) -> int:
    cfg = TrainConfig(
        total_updates=args.updates,
        seed=args.seed,
        horizon=args.horizon,
        learning_rate=args.lr,
    )
    out = args.out or default_out_dir()
    os.makedirs(out, exist_ok=True)
    cfg_doc = dataclasses.asdict(cfg)
    cfg_json = json.dumps(cfg_doc, sort_keys=True)

    def progress(upd, row):
        if not args.quiet and (upd % 10 == 0 or upd == cfg.total_updates - 1):
            print(f"update {upd:4d}  mean_reward {row[1]:.4f}")

    params, rows = train(cfg, out_dir=None, progress=progress)
    _write_csv(os.path.join(out, "curve.csv"), CURVE_HEADER, rows, cfg_json)
    save_checkpoint(
        os.path.join(out, "checkpoint.json"),
        params,
        meta={"train_config": cfg_doc},
    )
    _write_meta(os.path.join(out, "train.meta.json"), "train", cfg_doc)
    if not args.no_figures:
        from .reports import render_curve

        render_curve(rows, os.path.join(out, "curve.png"))
    print(f"trained {cfg.total_updates} updates -> {out}/checkpoint.json")
    return EXIT_OK


# --- eval --------------------------------------------------------------------


def _eval_run(controller_kind, checkpoint, sigma, seed, cycles):
    ctrl = {"kind": controller_kind}
    if controller_kind == "policy":
        ctrl["checkpoint"] = checkpoint
    cfg = config_from_dict(
        {
            "controller": ctrl,
            "terrain": {"kind": "rl", "sigma_cm": sigma, "seed": seed},
            "cycles": cycles,
            "seed": seed,
        }
    )
    rows, summary = run_experiment(cfg)
    rewards = [reward(r[1], r[2]) for r in rows]
    return summary["v_f_bar"], float(np.mean(rewards)), summary["beta_bar"]


def evaluate_controllers(checkpoint, sigmas, seeds, cycles=8):
    """Deterministic policy vs linear vs open-loop on identical seeded
    terrains; returns EVAL_HEADER rows sorted by (controller, sigma)."""
    load_checkpoint(checkpoint)  # fail fast with a checkpoint error
    rows = []
    for kind in ("linear", "open_loop", "policy"):
        for sigma in sigmas:
            per_seed = [_eval_run(kind, checkpoint, sigma, sd, cycles) for sd in seeds]
            v = np.asarray([p[0] for p in per_seed])
            r = np.asarray([p[1] for p in per_seed])
            b = np.asarray([p[2] for p in per_seed])
            ci = 1.96 * float(np.std(v)) / math.sqrt(len(v)) if len(v) > 1 else 0.0
            rows.append(
                [kind, float(sigma), float(np.mean(v)), ci, float(np.mean(r)), float(np.mean(b)), len(v)]
            )
    rows.sort(key=lambda row: (row[0], row[1]))
    return rows


def cmd_eval(args) -> int:
    sigmas = _parse_floats(args.sigmas)
    seeds = _parse_ints(args.seeds)
    if not sigmas or not seeds:
        raise UsageError("eval needs nonempty --sigmas and --seeds")
    rows = evaluate_controllers(args.checkpoint, sigmas, seeds, args.cycles)
    out = args.out or default_out_dir()
    os.makedirs(out, exist_ok=True)
    cfg_json = json.dumps(
        {"checkpoint": args.checkpoint, "sigmas": sigmas, "seeds": seeds, "cycles": args.cycles},
        sort_keys=True,
    )
    _write_csv(os.path.join(out, "eval.csv"), EVAL_HEADER, rows, cfg_json)
    _write_meta(os.path.join(out, "eval.meta.json"), "eval", {"checkpoint": args.checkpoint})
    if not args.no_figures:
        from .reports import render_eval

        render_eval(rows, os.path.join(out, "eval.png"))
    for row in rows:
        print(f"{row[0]:>9s} sigma={row[1]:g}: v_f={row[2]:.4f} +/- {row[3]:.4f} reward={row[4]:.4f}")
    return EXIT_OK


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wavegait", description=__doc__)
    p.add_argument("--version", action="version", version=f"wavegait {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-terrain", help="generate and save a block height field")
    g.add_argument("--rugosity", type=float, help="lab terrain R_g (std = 12.5 R_g cm)")
    g.add_argument("--rl-sigma", type=float, help="training terrain sigma (cm)")
    g.add_argument("--flat", action="store_true", help="all-zero field")
    g.add_argument("--size", default="10x3", help="field size, metres (WxL)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help="output directory (default $WAVEGAIT_OUT_DIR or ./results)")
    g.add_argument("--no-figures", action="store_true")
    g.set_defaults(func=cmd_gen_terrain)

    r = sub.add_parser("run", help="run cycles with one controller on one terrain")
    r.add_argument("--config", help="YAML experiment config; flags override")
    r.add_argument("--cycles", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--controller", choices=("open_loop", "linear", "policy"))
    r.add_argument("--checkpoint", help="policy checkpoint (implies --controller policy)")
    r.add_argument("--terrain", choices=("flat", "blocks", "rl"))
    r.add_argument("--sigma-cm", type=float)
    r.add_argument("--rugosity", type=float)
    r.add_argument("--terrain-seed", type=int)
    r.add_argument("--out")
    r.add_argument("--no-figures", action="store_true")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="A_v x terrain x seed grid of open-loop runs")
    s.add_argument("--a-v", required=True, help="comma list of A_v values (deg)")
    s.add_argument("--terrains", required=True, help="comma list: flat, rg:<R_g>, sigma:<cm>")
    s.add_argument("--seeds", required=True, help="comma list of integer seeds")
    s.add_argument("--cycles", type=int, default=8)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.add_argument("--no-figures", action="store_true")
    s.set_defaults(func=cmd_sweep)

    t = sub.add_parser("train", help="train the PPO amplitude policy")
    t.add_argument("--updates", type=int, default=200)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--horizon", type=int, default=256)
    t.add_argument("--lr", type=float, default=3e-4)
    t.add_argument("--quiet", action="store_true")
    t.add_argument("--out")
    t.add_argument("--no-figures", action="store_true")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="compare policy vs linear vs open-loop")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--sigmas", default="2,4,6,8")
    e.add_argument("--seeds", default="100,101,102,103,104,105,106,107,108,109")
    e.add_argument("--cycles", type=int, default=8)
    e.add_argument("--out")
    e.add_argument("--no-figures", action="store_true")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigurationError, CheckpointError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except WavegaitError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
