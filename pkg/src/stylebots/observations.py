"""Per-agent observation encoding.

Each agent sees the full arena from its own point of view, split into a
stack of binary grid planes plus a flat vector of scalars and the two
behavior vectors (running and target). Channel order:

    0 self (zeros while dead)
    1 teammate
    2 enemies (both on one plane)
    3 walls
    4 coins
    5 diamonds
    6 NPCs
    7 attack effects from the previous resolved step

The flat scalar block is [team flag, time remaining, then health and
orientation for self, teammate, enemy, enemy]. All entries are scaled
to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arena import EnvConfig, GameState, enemies_of, teammate_of
from .behavior import N_DIMS, BehaviorVector

N_CHANNELS = 8
N_STATE_SCALARS = 10


@dataclass(frozen=True)
class ObsSpec:
    """Shapes of the observation pieces, derived from the arena config."""

    grid_channels: int
    grid_width: int
    grid_height: int
    state_dim: int
    behavior_dim: int

    @classmethod
    def from_config(cls, cfg: EnvConfig) -> "ObsSpec":
        return cls(
            grid_channels=N_CHANNELS,
            grid_width=cfg.grid_width,
            grid_height=cfg.grid_height,
            state_dim=N_STATE_SCALARS,
            behavior_dim=N_DIMS,
        )


@dataclass
class Observation:
    grid: np.ndarray  # (channels, height, width) float32 in {0, 1}
    state_vec: np.ndarray  # (state_dim,) float32
    behavior_current: np.ndarray  # (behavior_dim,) float32
    behavior_target: np.ndarray  # (behavior_dim,) float32


def encode_observation(
    state: GameState,
    agent_id: int,
    behavior_current: BehaviorVector,
    behavior_target: BehaviorVector,
    condition_on_behavior: bool = True,
) -> Observation:
    """Encode the arena from `agent_id`'s perspective.

    With `condition_on_behavior` off (the win-only training mode) both
    behavior blocks are zeroed, keeping the network input shape identical
    across modes.
    """
    cfg = state.config
    grid = np.zeros((N_CHANNELS, cfg.grid_height, cfg.grid_width), dtype=np.float32)

    me = state.player(agent_id)
    mate = state.player(teammate_of(agent_id))
    if me.alive:
        grid[0, me.position[1], me.position[0]] = 1.0
    if mate.alive:
        grid[1, mate.position[1], mate.position[0]] = 1.0
    for eid in enemies_of(agent_id):
        enemy = state.player(eid)
        if enemy.alive:
            grid[2, enemy.position[1], enemy.position[0]] = 1.0
    for (x, y) in cfg.wall_layout:
        grid[3, y, x] = 1.0
    for (x, y) in state.coins:
        grid[4, y, x] = 1.0
    for (x, y) in state.diamonds:
        grid[5, y, x] = 1.0
    for (x, y) in state.npcs:
        grid[6, y, x] = 1.0
    for (x, y) in state.attack_effects:
        grid[7, y, x] = 1.0

    scalars = [
        1.0 if me.team == "blue" else 0.0,
        (cfg.episode_length - state.timestep) / cfg.episode_length,
    ]
    for pid in (agent_id, teammate_of(agent_id), *enemies_of(agent_id)):
        p = state.player(pid)
        scalars.append((p.health if p.alive else 0) / cfg.player_health)
        scalars.append(int(p.orientation) / 3.0)
    state_vec = np.array(scalars, dtype=np.float32)

    if condition_on_behavior:
        b_curr = behavior_current.as_array().astype(np.float32)
        b_target = behavior_target.as_array().astype(np.float32)
    else:
        b_curr = np.zeros(N_DIMS, dtype=np.float32)
        b_target = np.zeros(N_DIMS, dtype=np.float32)

    return Observation(grid, state_vec, b_curr, b_target)
