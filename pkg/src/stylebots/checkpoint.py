"""Checkpoint save/load with structural validation.

A checkpoint is a torch-serialized dict pinning the format version, the
training mode, both spec blocks needed to rebuild the network, the
hyperparameters, and the model/optimizer states. Loading validates all of
it; a truncated file or a mismatched format refuses loudly instead of
producing a half-initialized model.
"""

from __future__ import annotations

from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

import torch

from .errors import CheckpointError
from .networks import ActorCritic, NetworkSpec, build_network
from .observations import ObsSpec
from .ppo import Hyperparams

CHECKPOINT_FORMAT_VERSION = 1


def save_checkpoint(
    path,
    network: ActorCritic,
    optimizer,
    mode: str,
    hyper: Hyperparams,
    train_step: int,
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "created": datetime.now(timezone.utc).isoformat(),
        "mode": mode,
        "network_spec": network.net_spec.to_dict(),
        "obs_spec": asdict(network.obs_spec),
        "hyper": hyper.to_dict(),
        "model_state": network.state_dict(),
        "optimizer_state": optimizer.state_dict() if optimizer is not None else None,
        "train_step": train_step,
    }
    tmp = path.with_suffix(path.suffix + ".tmp")
    torch.save(payload, tmp)
    tmp.replace(path)


def load_checkpoint(path) -> dict:
    """Load and validate a checkpoint dict (model not yet constructed)."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint {path} does not exist")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:
        raise CheckpointError(f"checkpoint {path} is unreadable: {exc}") from exc
    if not isinstance(payload, dict):
        raise CheckpointError(f"checkpoint {path} is not a checkpoint dict")
    version = payload.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(
            f"checkpoint {path} has format_version {version!r}, "
            f"this tool reads version {CHECKPOINT_FORMAT_VERSION}"
        )
    required = {"mode", "network_spec", "obs_spec", "hyper", "model_state", "train_step"}
    missing = sorted(required - payload.keys())
    if missing:
        raise CheckpointError(f"checkpoint {path} lacks required keys: {missing}")
    if payload["mode"] not in ("behavior", "winonly"):
        raise CheckpointError(f"checkpoint {path} has unknown mode {payload['mode']!r}")
    return payload


def restore_network(payload: dict) -> ActorCritic:
    """Rebuild the network a checkpoint describes and load its weights."""
    obs_spec = ObsSpec(**payload["obs_spec"])
    net_spec = NetworkSpec.from_dict(payload["network_spec"])
    net = build_network(obs_spec, net_spec, seed=0)
    try:
        net.load_state_dict(payload["model_state"])
    except RuntimeError as exc:
        raise CheckpointError(f"checkpoint weights do not fit their declared specs: {exc}") from exc
    return net


def load_network(path) -> tuple[ActorCritic, dict]:
    payload = load_checkpoint(path)
    return restore_network(payload), payload
