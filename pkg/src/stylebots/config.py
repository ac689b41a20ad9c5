"""Run configuration: YAML loading, validation, and overrides.

A run config nests the arena, reward, optimizer and network blocks under
one document, with training-level fields (mode, seed, env count, step
budget) at the top. Validation collects every violation across all blocks
before raising, so a bad file reports all of its problems at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .arena import EnvConfig, default_score_ceiling
from .errors import ConfigError
from .networks import NetworkSpec
from .ppo import Hyperparams
from .rewards import RewardParams

MODES = ("behavior", "winonly")


@dataclass(frozen=True)
class RunConfig:
    mode: str = "behavior"
    seed: int = 0
    n_envs: int = 8
    total_steps: int = 500_000
    checkpoint_interval: int = 100_000
    env: EnvConfig = field(default_factory=EnvConfig)
    reward: RewardParams = field(default_factory=RewardParams)
    hyper: Hyperparams = field(default_factory=Hyperparams)
    network: NetworkSpec = field(default_factory=NetworkSpec)

    def validate(self) -> list[str]:
        v = []
        if self.mode not in MODES:
            v.append(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.seed < 0:
            v.append(f"seed must be >= 0, got {self.seed}")
        if self.n_envs < 1:
            v.append(f"n_envs must be >= 1, got {self.n_envs}")
        if self.total_steps < 0:
            v.append(f"total_steps must be >= 0, got {self.total_steps}")
        if self.checkpoint_interval < 1:
            v.append(f"checkpoint_interval must be >= 1, got {self.checkpoint_interval}")
        v.extend(self.env.validate())
        v.extend(self.reward.validate())
        v.extend(self.hyper.validate())
        v.extend(self.network.validate())
        return v

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "n_envs": self.n_envs,
            "total_steps": self.total_steps,
            "checkpoint_interval": self.checkpoint_interval,
            "env": self.env.to_dict(),
            "reward": {"scale": self.reward.scale},
            "hyper": self.hyper.to_dict(),
            "network": self.network.to_dict(),
        }


_TOP_KEYS = {"mode", "seed", "n_envs", "total_steps", "checkpoint_interval"}
_BLOCK_KEYS = {"env", "reward", "hyper", "network"}


def config_from_dict(doc: dict) -> RunConfig:
    """Build a RunConfig from a plain dict; unknown keys are hard errors."""
    if not isinstance(doc, dict):
        raise ConfigError([f"config document must be a mapping, got {type(doc).__name__}"])
    unknown = sorted(set(doc) - _TOP_KEYS - _BLOCK_KEYS)
    violations = [f"unknown config key: {k}" for k in unknown]

    def build(cls, block_name, d):
        known = set(cls.__dataclass_fields__)
        bad = sorted(set(d) - known)
        if bad:
            violations.extend(f"unknown key in {block_name}: {k}" for k in bad)
            d = {k: v for k, v in d.items() if k in known}
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            violations.append(f"bad {block_name} block: {exc}")
            return cls()

    env_dict = dict(doc.get("env") or {})
    walls = env_dict.pop("wall_layout", [])
    try:
        env_dict["wall_layout"] = frozenset((int(x), int(y)) for x, y in walls)
    except (TypeError, ValueError):
        violations.append(f"wall_layout must be a list of [x, y] pairs, got {walls!r}")
        env_dict["wall_layout"] = frozenset()
    ceiling_given = "score_ceiling" in env_dict
    env = build(EnvConfig, "env", env_dict)
    if not ceiling_given:
        # The default ceiling tracks the other knobs instead of being a
        # stale literal, so shrunken test configs stay self-consistent.
        env = replace(env, score_ceiling=default_score_ceiling(env))

    reward = build(RewardParams, "reward", dict(doc.get("reward") or {}))
    hyper = build(Hyperparams, "hyper", dict(doc.get("hyper") or {}))

    net_dict = dict(doc.get("network") or {})
    bad_net = sorted(set(net_dict) - {"conv_layers", "hidden_sizes"})
    violations.extend(f"unknown key in network: {k}" for k in bad_net)
    net_kwargs = {}
    if "conv_layers" in net_dict:
        try:
            net_kwargs["conv_layers"] = tuple(
                tuple(int(x) for x in t) for t in net_dict["conv_layers"]
            )
        except (TypeError, ValueError):
            violations.append(
                f"conv_layers must be a list of [channels, kernel, stride] triples"
            )
    if "hidden_sizes" in net_dict:
        try:
            net_kwargs["hidden_sizes"] = tuple(int(h) for h in net_dict["hidden_sizes"])
        except (TypeError, ValueError):
            violations.append("hidden_sizes must be a list of integers")
    network = NetworkSpec(**net_kwargs)

    if violations:
        raise ConfigError(violations)

    cfg = RunConfig(
        mode=str(doc.get("mode", "behavior")),
        seed=int(doc.get("seed", 0)),
        n_envs=int(doc.get("n_envs", 8)),
        total_steps=int(doc.get("total_steps", 500_000)),
        checkpoint_interval=int(doc.get("checkpoint_interval", 100_000)),
        env=env,
        reward=reward,
        hyper=hyper,
        network=network,
    )
    violations = cfg.validate()
    if violations:
        raise ConfigError(violations)
    return cfg


def load_config(path, overrides: list[str] | None = None) -> RunConfig:
    """Load a YAML run config, applying dotted-path overrides.

    Overrides look like `hyper.learning_rate=1e-4`; values parse as YAML
    scalars. Missing files and malformed YAML raise ConfigError.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError([f"config file {path} does not exist"])
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError([f"config file {path} is not valid YAML: {exc}"])
    if doc is None:
        doc = {}
    for ov in overrides or []:
        doc = apply_override(doc, ov)
    return config_from_dict(doc)


def apply_override(doc: dict, override: str) -> dict:
    if "=" not in override:
        raise ConfigError([f"override {override!r} must look like key.path=value"])
    key_path, raw = override.split("=", 1)
    keys = key_path.strip().split(".")
    if not all(keys):
        raise ConfigError([f"override {override!r} has an empty key segment"])
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError:
        raise ConfigError([f"override value {raw!r} is not a YAML scalar"])
    if isinstance(value, str):
        # YAML leaves bare scientific notation like 1e-4 as a string
        try:
            value = float(value)
        except ValueError:
            pass
    node = doc
    for k in keys[:-1]:
        nxt = node.get(k)
        if not isinstance(nxt, dict):
            nxt = {}
            node[k] = nxt
        node = nxt
    node[keys[-1]] = value
    return doc
