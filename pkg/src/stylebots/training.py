"""Training loop: vectorized arena rollouts feeding the PPO trainer.

Every environment advances in lockstep; one batched network call serves
all agents of all environments each tick. Episode seeds derive from the
master seed through (env index, episode index) spawn keys, so any single
episode can be reproduced in isolation, and two runs with the same config
and seed produce byte-identical metric curves and checkpoints.

In behavior mode each agent gets a fresh random conditioning target at
every episode start, its running behavior vector resets to zero, and the
reward pays for closing the distance to the target. In win-only mode the
behavior machinery is bypassed and the reward is normalized score gain.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import torch

from . import __version__
from .arena import N_PLAYERS, GameState, reset, step
from .behavior import N_DIMS, BehaviorAccumulator, BehaviorVector, TargetVector, sample_target
from .checkpoint import save_checkpoint
from .config import RunConfig
from .networks import build_network
from .observations import Observation, ObsSpec, encode_observation
from .policies import NetworkPolicy, batch_observations
from .ppo import PPOTrainer, RolloutBuffer
from .rewards import alignment_reward, score_reward

CURVES_HEADER = (
    "step,mean_return,mean_behavior_error,policy_loss,value_loss,entropy,learning_rate"
)


def episode_seed(master_seed: int, env_idx: int, episode_idx: int) -> int:
    """Deterministic per-episode arena seed, independent across episodes."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(env_idx, episode_idx))
    return int(seq.generate_state(1, np.uint64)[0])


def _target_rng(master_seed: int, env_idx: int, episode_idx: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(env_idx, episode_idx, 1))
    )


@dataclass
class _AgentTrack:
    target: TargetVector
    prev_behavior: BehaviorVector
    acc: BehaviorAccumulator | None
    episode_return: float = 0.0


@dataclass
class EpisodeSummary:
    env_idx: int
    episode_idx: int
    agent_id: int
    episode_return: float
    behavior_error: float | None  # None in win-only mode


class _EnvRunner:
    """One environment's rollout state within the vectorized loop."""

    def __init__(self, cfg: RunConfig, env_idx: int):
        self.cfg = cfg
        self.env_idx = env_idx
        self.episode_idx = 0
        self.state: GameState
        self.tracks: list[_AgentTrack]
        self._begin_episode()

    def _begin_episode(self) -> None:
        seed = episode_seed(self.cfg.seed, self.env_idx, self.episode_idx)
        self.state = reset(self.cfg.env, seed)
        behavior_mode = self.cfg.mode == "behavior"
        rng = _target_rng(self.cfg.seed, self.env_idx, self.episode_idx)
        self.tracks = []
        for agent_id in range(N_PLAYERS):
            self.tracks.append(
                _AgentTrack(
                    target=sample_target(rng) if behavior_mode else TargetVector.zero(),
                    prev_behavior=BehaviorVector.zero(),
                    acc=(
                        BehaviorAccumulator.start(self.state, agent_id)
                        if behavior_mode
                        else None
                    ),
                )
            )

    def observations(self) -> list[Observation]:
        behavior_mode = self.cfg.mode == "behavior"
        return [
            encode_observation(
                self.state,
                agent_id,
                self.tracks[agent_id].prev_behavior,
                self.tracks[agent_id].target,
                condition_on_behavior=behavior_mode,
            )
            for agent_id in range(N_PLAYERS)
        ]

    def step(self, actions) -> tuple[list[float], bool, list[EpisodeSummary]]:
        """Advance one tick. Returns per-agent rewards, episode-done flag,
        and summaries for any episode that just completed."""
        behavior_mode = self.cfg.mode == "behavior"
        self.state, events = step(self.state, actions)
        rewards = []
        for agent_id in range(N_PLAYERS):
            track = self.tracks[agent_id]
            if behavior_mode:
                track.acc.observe_step(self.state)
                curr = track.acc.current(self.state)
                r = alignment_reward(
                    track.prev_behavior, curr, track.target, self.cfg.reward
                )
                track.prev_behavior = curr
            else:
                r = score_reward(events[agent_id], self.cfg.env)
            track.episode_return += r
            rewards.append(r)

        done = self.state.timestep >= self.cfg.env.episode_length
        summaries = []
        if done:
            for agent_id in range(N_PLAYERS):
                track = self.tracks[agent_id]
                err = None
                if behavior_mode:
                    diff = track.prev_behavior.as_array() - track.target.as_array()
                    err = float(np.linalg.norm(diff)) / math.sqrt(N_DIMS)
                summaries.append(
                    EpisodeSummary(
                        env_idx=self.env_idx,
                        episode_idx=self.episode_idx,
                        agent_id=agent_id,
                        episode_return=track.episode_return,
                        behavior_error=err,
                    )
                )
            self.episode_idx += 1
            self._begin_episode()
        return rewards, done, summaries


@dataclass
class TrainResult:
    status: str  # "complete" or "interrupted"
    steps_done: int
    updates: int
    final_checkpoint: Path
    curves_path: Path
    manifest_path: Path


def train(cfg: RunConfig, output_dir) -> TrainResult:
    """Run PPO training per the config, writing artifacts under output_dir.

    Artifacts: checkpoints/step_*.pt (plus final.pt), curves.csv with one
    row per update, manifest.json describing the run. Ctrl-C flushes a
    checkpoint and marks the manifest interrupted instead of losing the
    run.
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    ckpt_dir = output_dir / "checkpoints"
    ckpt_dir.mkdir(exist_ok=True)
    curves_path = output_dir / "curves.csv"
    manifest_path = output_dir / "manifest.json"

    obs_spec = ObsSpec.from_config(cfg.env)
    network = build_network(obs_spec, cfg.network, seed=cfg.seed)
    trainer = PPOTrainer(
        network,
        cfg.hyper,
        total_steps=cfg.total_steps,
        shuffle_seed=cfg.seed + 2,
    )
    rollout_policy = NetworkPolicy(network, seed=cfg.seed + 1)
    buffer = RolloutBuffer(cfg.hyper.buffer_size)
    runners = [_EnvRunner(cfg, env_idx) for env_idx in range(cfg.n_envs)]

    manifest = {
        "tool_version": __version__,
        "created": datetime.now(timezone.utc).isoformat(),
        "status": "running",
        "config": cfg.to_dict(),
        "steps_done": 0,
        "updates": 0,
        "checkpoints": [],
    }

    def write_manifest():
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    def save(step_count: int, name: str | None = None) -> str:
        fname = name or f"step_{step_count:010d}.pt"
        save_checkpoint(
            ckpt_dir / fname, network, trainer.optimizer, cfg.mode, cfg.hyper, step_count
        )
        rel = f"checkpoints/{fname}"
        if rel not in manifest["checkpoints"]:
            manifest["checkpoints"].append(rel)
        return rel

    write_manifest()
    save(0)
    curves = curves_path.open("w", encoding="utf-8")
    curves.write(CURVES_HEADER + "\n")

    steps_collected = 0
    updates = 0
    next_checkpoint = cfg.checkpoint_interval
    window: list[EpisodeSummary] = []
    status = "complete"

    try:
        while steps_collected < cfg.total_steps:
            obs_batch: list[Observation] = []
            for runner in runners:
                obs_batch.extend(runner.observations())
            actions, log_probs, values = rollout_policy.act_batch(obs_batch)

            for i, runner in enumerate(runners):
                base = i * N_PLAYERS
                joint = actions[base : base + N_PLAYERS]
                rewards, done, summaries = runner.step(joint)
                window.extend(summaries)
                for agent_id in range(N_PLAYERS):
                    j = base + agent_id
                    o = obs_batch[j]
                    buffer.add(
                        (runner.env_idx, agent_id),
                        o.grid,
                        o.state_vec,
                        o.behavior_current,
                        o.behavior_target,
                        int(actions[j]),
                        float(log_probs[j]),
                        float(values[j]),
                        rewards[agent_id],
                        done,
                    )
            steps_collected += N_PLAYERS * cfg.n_envs

            if buffer.full:
                _set_bootstraps(network, runners, buffer)
                stats = trainer.update(buffer)
                updates += 1
                curves.write(_curves_row(steps_collected, window, stats) + "\n")
                curves.flush()
                window = []
                if steps_collected >= next_checkpoint:
                    save(steps_collected)
                    manifest["steps_done"] = steps_collected
                    manifest["updates"] = updates
                    write_manifest()
                    while next_checkpoint <= steps_collected:
                        next_checkpoint += cfg.checkpoint_interval
    except KeyboardInterrupt:
        status = "interrupted"
    finally:
        curves.close()

    final_rel = save(steps_collected, name="final.pt")
    manifest["status"] = status
    manifest["steps_done"] = steps_collected
    manifest["updates"] = updates
    write_manifest()
    return TrainResult(
        status=status,
        steps_done=steps_collected,
        updates=updates,
        final_checkpoint=output_dir / final_rel,
        curves_path=curves_path,
        manifest_path=manifest_path,
    )


def _set_bootstraps(network, runners: list[_EnvRunner], buffer: RolloutBuffer) -> None:
    """Value the next observation of every stream for GAE bootstrapping.

    Streams whose last transition was terminal ignore the bootstrap, so it
    is safe to value the freshly reset episode's first observation there.
    """
    obs_batch: list[Observation] = []
    for runner in runners:
        obs_batch.extend(runner.observations())
    with torch.no_grad():
        _, values = network(*batch_observations(obs_batch))
    v = values.numpy().astype(np.float64)
    for i, runner in enumerate(runners):
        for agent_id in range(N_PLAYERS):
            buffer.set_bootstrap((runner.env_idx, agent_id), float(v[i * N_PLAYERS + agent_id]))


def _curves_row(step_count: int, window: list[EpisodeSummary], stats) -> str:
    if window:
        mean_return = f"{np.mean([s.episode_return for s in window]):.10g}"
        errs = [s.behavior_error for s in window if s.behavior_error is not None]
        mean_err = f"{np.mean(errs):.10g}" if errs else ""
    else:
        mean_return = ""
        mean_err = ""
    return ",".join(
        [
            str(step_count),
            mean_return,
            mean_err,
            f"{stats.policy_loss:.10g}",
            f"{stats.value_loss:.10g}",
            f"{stats.entropy:.10g}",
            f"{stats.learning_rate:.10g}",
        ]
    )
