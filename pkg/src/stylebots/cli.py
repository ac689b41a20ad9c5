"""Command line interface.

Subcommands:

  train               run PPO training from a YAML config
  eval                roll out a trained policy through the evaluation
                      protocols; writes CSV tables and PNG figures
  rollout             simulate episodes to a verifiable JSONL log
  verify              re-simulate a JSONL log and check every state hash
  inspect-checkpoint  print a checkpoint's metadata as JSON

Exit codes: 0 success, 2 configuration errors, 3 log/checkpoint I/O
errors, 4 numeric faults, 1 anything else.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .arena import N_PLAYERS
from .behavior import DIM_NAMES, N_DIMS, TargetVector
from .checkpoint import load_checkpoint, load_network
from .config import load_config
from .errors import ConfigError, StylebotsError
from .evaluation import (
    AgentAssignment,
    BoxStats,
    run_episodes,
    write_contrast_report,
    write_error_report,
    write_fixed_target_report,
)
from .policies import NetworkPolicy, RandomPolicy


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 0
    try:
        return args.func(args)
    except StylebotsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stylebots",
        description="Train and evaluate behavior-conditioned arena agents.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("train", help="run PPO training from a YAML config")
    p.add_argument("--config", required=True, help="run config YAML")
    p.add_argument("--output-dir", required=True, help="directory for run artifacts")
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY.PATH=VALUE",
        help="override a config entry (repeatable), e.g. hyper.learning_rate=1e-4",
    )
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint; writes CSVs and figures")
    p.add_argument("--config", required=True, help="run config YAML (arena definition)")
    p.add_argument("--checkpoint", required=True, help="trained policy checkpoint")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--episodes", type=int, default=100, help="episodes per protocol")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--contrast-checkpoint",
        default=None,
        help="separately trained unconditioned policy for the contrast protocol "
        "(defaults to the main checkpoint with conditioning inputs zeroed)",
    )
    p.add_argument(
        "--fixed-target",
        default=None,
        metavar="B1,B2,B3,B4,B5,B6",
        help="behavior target for the fixed-target protocol "
        "(default: equal score ratios, 0.5 elsewhere)",
    )
    p.add_argument("--no-figures", action="store_true", help="write CSVs only")
    p.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY.PATH=VALUE"
    )
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("rollout", help="simulate episodes to a verifiable JSONL log")
    p.add_argument("--config", required=True, help="run config YAML (arena definition)")
    p.add_argument(
        "--checkpoint", default=None, help="policy checkpoint (default: random actions)"
    )
    p.add_argument("--output", required=True, help="JSONL log path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY.PATH=VALUE"
    )
    p.set_defaults(func=_cmd_rollout)

    p = sub.add_parser("verify", help="re-simulate a JSONL log and check its hashes")
    p.add_argument("log", help="JSONL log path")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("inspect-checkpoint", help="print checkpoint metadata as JSON")
    p.add_argument("checkpoint")
    p.set_defaults(func=_cmd_inspect)

    return parser


def _cmd_train(args) -> int:
    from .training import train

    cfg = load_config(args.config, args.overrides)
    result = train(cfg, args.output_dir)
    _render_curves_figure(result.curves_path)
    print(
        f"{result.status}: {result.steps_done} transitions, {result.updates} updates, "
        f"final checkpoint {result.final_checkpoint}"
    )
    return 0 if result.status == "complete" else 1


def _render_curves_figure(curves_path: Path) -> None:
    with Path(curves_path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return
    from .figures import render_curves

    steps = [int(r["step"]) for r in rows]
    columns = {}
    for col in ("mean_return", "mean_behavior_error", "policy_loss", "entropy"):
        values = [float(r[col]) if r[col] else None for r in rows]
        if any(v is not None for v in values):
            columns[col] = values
    if columns:
        render_curves(Path(curves_path).with_name("curves.png"), steps, columns)


def _parse_fixed_target(raw: str | None) -> TargetVector:
    if raw is None:
        third = 1.0 / 3.0
        return TargetVector(third, third, 1.0 - (third + third), 0.5, 0.5, 0.5)
    parts = raw.split(",")
    if len(parts) != N_DIMS:
        raise ConfigError([f"--fixed-target needs {N_DIMS} comma-separated values"])
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise ConfigError([f"--fixed-target values must be numbers, got {raw!r}"])
    # Absorb decimal-literal rounding: rebuild the third ratio from the
    # other two when the user's sum is within epsilon of 1.
    if abs((vals[0] + vals[1] + vals[2]) - 1.0) < 1e-9:
        vals[2] = 1.0 - (vals[0] + vals[1])
    target = TargetVector(*vals)
    violations = target.validate()
    if violations:
        raise ConfigError([f"--fixed-target: {v}" for v in violations])
    return target


def _cmd_eval(args) -> int:
    cfg = load_config(args.config, args.overrides)
    network, payload = load_network(args.checkpoint)
    if payload["obs_spec"]["grid_width"] != cfg.env.grid_width or (
        payload["obs_spec"]["grid_height"] != cfg.env.grid_height
    ):
        raise ConfigError(
            [
                "checkpoint was trained on a "
                f"{payload['obs_spec']['grid_width']}x{payload['obs_spec']['grid_height']} "
                f"grid but the config defines {cfg.env.grid_width}x{cfg.env.grid_height}"
            ]
        )
    contrast_net = network
    if args.contrast_checkpoint:
        contrast_net, _ = load_network(args.contrast_checkpoint)

    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    target = _parse_fixed_target(args.fixed_target)
    n = args.episodes

    policy = NetworkPolicy(network, seed=args.seed)
    fixed_eps = run_episodes(
        cfg.env,
        [
            AgentAssignment(policy, conditioned=True, fixed_target=target),
            AgentAssignment(policy, conditioned=True),
            AgentAssignment(policy, conditioned=True),
            AgentAssignment(policy, conditioned=True),
        ],
        n_episodes=n,
        seed=args.seed,
    )
    raw_fixed, radar_csv = write_fixed_target_report(out_dir, fixed_eps, target)

    policy = NetworkPolicy(network, seed=args.seed + 1)
    err_eps = run_episodes(
        cfg.env,
        [AgentAssignment(policy, conditioned=True) for _ in range(4)],
        n_episodes=n,
        seed=args.seed + 1,
    )
    raw_err, errors_csv = write_error_report(out_dir, err_eps)

    policy = NetworkPolicy(network, seed=args.seed + 2)
    contrast_policy = NetworkPolicy(contrast_net, seed=args.seed + 3)
    cond_eps = run_episodes(
        cfg.env,
        [AgentAssignment(policy, conditioned=True) for _ in range(N_PLAYERS)],
        n_episodes=n,
        seed=args.seed + 2,
    )
    uncond_eps = run_episodes(
        cfg.env,
        [AgentAssignment(contrast_policy, conditioned=False) for _ in range(N_PLAYERS)],
        n_episodes=n,
        seed=args.seed + 3,
    )
    raw_contrast, pca_csv, div_csv = write_contrast_report(out_dir, cond_eps + uncond_eps)

    written = [raw_fixed, radar_csv, raw_err, errors_csv, raw_contrast, pca_csv, div_csv]
    if not args.no_figures:
        written.extend(_render_eval_figures(out_dir, radar_csv, errors_csv, pca_csv))

    for path in written:
        print(path)
    return 0


def _render_eval_figures(out_dir: Path, radar_csv, errors_csv, pca_csv) -> list[Path]:
    from .figures import render_error_boxes, render_pca_scatter, render_radar

    with Path(radar_csv).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    radar_png = render_radar(
        out_dir / "radar.png",
        [float(r["target"]) for r in rows],
        [float(r["mean"]) for r in rows],
        [float(r["sigma"]) for r in rows],
    )

    with Path(errors_csv).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    stats = {
        r["dimension"]: BoxStats(
            q1=float(r["q1"]),
            median=float(r["median"]),
            q3=float(r["q3"]),
            lo_whisker=float(r["lo_whisker"]),
            hi_whisker=float(r["hi_whisker"]),
            mean=float(r["mean"]),
        )
        for r in rows
    }
    errors_png = render_error_boxes(out_dir / "errors.png", stats)

    with Path(pca_csv).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    pca_png = render_pca_scatter(
        out_dir / "pca.png",
        [float(r["x"]) for r in rows],
        [float(r["y"]) for r in rows],
        [float(r["error"]) if r["error"] else None for r in rows],
        [r["policy"] for r in rows],
    )
    return [radar_png, errors_png, pca_png]


def _cmd_rollout(args) -> int:
    from .arena import N_PLAYERS, reset, step
    from .behavior import BehaviorAccumulator, BehaviorVector, sample_target
    from .observations import encode_observation
    from .replay import ReplayWriter

    cfg = load_config(args.config, args.overrides)
    if args.checkpoint:
        network, payload = load_network(args.checkpoint)
        conditioned = payload["mode"] == "behavior"
        policy = NetworkPolicy(network, seed=args.seed)
        tag = f"checkpoint:{Path(args.checkpoint).name}"
    else:
        conditioned = False
        policy = RandomPolicy(seed=args.seed)
        tag = "random"

    writer = ReplayWriter(Path(args.output), cfg.env, args.seed, [tag] * N_PLAYERS)
    state = reset(cfg.env, args.seed)
    writer.record_initial(state)
    target_rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(1,)))
    targets = [sample_target(target_rng) for _ in range(N_PLAYERS)]
    accs = [BehaviorAccumulator.start(state, i) for i in range(N_PLAYERS)]
    prev = [BehaviorVector.zero() for _ in range(N_PLAYERS)]
    for _ in range(cfg.env.episode_length):
        obs = [
            encode_observation(state, i, prev[i], targets[i], conditioned)
            for i in range(N_PLAYERS)
        ]
        actions, _, _ = policy.act_batch(obs)
        state, events = step(state, actions)
        writer.record_step(state, actions, events)
        for i in range(N_PLAYERS):
            accs[i].observe_step(state)
            prev[i] = accs[i].current(state)
    writer.close()
    print(args.output)
    return 0


def _cmd_verify(args) -> int:
    from .replay import verify_log

    steps = verify_log(args.log)
    print(f"ok: {steps} steps verified")
    return 0


def _cmd_inspect(args) -> int:
    payload = load_checkpoint(args.checkpoint)
    meta = {k: v for k, v in payload.items() if k not in ("model_state", "optimizer_state")}
    n_params = sum(int(np.prod(tuple(t.shape))) for t in payload["model_state"].values())
    meta["parameter_count"] = n_params
    print(json.dumps(meta, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
