"""Deterministic 2v2 grid-arena simulation.

The arena is a discrete grid holding four players (two per team), randomly
wandering lethal NPCs, and two kinds of collectibles (coins and diamonds).
Players score by picking up collectibles and by eliminating opponents with
a directional attack. All randomness flows through a per-state generator,
so a (config, seed, action-sequence) triple fully determines the run.

Phase order within one step (published here because it is part of the
determinism contract):

    1. attacks resolve on pre-move positions (agent-index order)
    2. player movement, conflicts resolved by agent-index priority
    3. item pickup
    4. NPC movement, then lethal NPC contact
    5. item spawning
    6. clock: timestep, attack cooldowns, respawns

Coordinates are (x, y) with 0 <= x < grid_width and 0 <= y < grid_height.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import ConfigError, LifecycleError

Coord = tuple[int, int]

BLUE = "blue"
RED = "red"
N_PLAYERS = 4


class Action(IntEnum):
    MOVE_LEFT = 0
    MOVE_RIGHT = 1
    MOVE_UP = 2
    MOVE_DOWN = 3
    ATTACK = 4
    WAIT = 5


class Orientation(IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3


# (dx, dy) per orientation; y grows downward.
_ORIENT_DELTA: dict[Orientation, Coord] = {
    Orientation.UP: (0, -1),
    Orientation.DOWN: (0, 1),
    Orientation.LEFT: (-1, 0),
    Orientation.RIGHT: (1, 0),
}

_MOVE_ORIENT: dict[Action, Orientation] = {
    Action.MOVE_LEFT: Orientation.LEFT,
    Action.MOVE_RIGHT: Orientation.RIGHT,
    Action.MOVE_UP: Orientation.UP,
    Action.MOVE_DOWN: Orientation.DOWN,
}


@dataclass(frozen=True)
class EnvConfig:
    """Arena parameters. See `validate` for the accepted ranges."""

    grid_width: int = 16
    grid_height: int = 16
    episode_length: int = 256
    coin_value: int = 1
    diamond_value: int = 5
    kill_value: int = 10
    coin_spawn_period: int = 4
    diamond_spawn_period: int = 16
    max_coins: int = 8
    max_diamonds: int = 3
    npc_count: int = 2
    attack_range: int = 3
    attack_cooldown: int = 4
    player_health: int = 2
    attack_damage: int = 1
    respawn_delay: int = 8
    score_ceiling: int = 106  # theoretical per-player score limit (dominance denominator)
    diamond_spawn_radius: float = 3.0
    wall_layout: frozenset[Coord] = frozenset()

    def validate(self) -> list[str]:
        """Return a list of violated invariants (empty when valid)."""
        v = []
        if self.grid_width < 8 or self.grid_height < 8:
            v.append(f"grid dims must be >= 8, got {self.grid_width}x{self.grid_height}")
        if self.episode_length < 1:
            v.append(f"episode_length must be >= 1, got {self.episode_length}")
        if self.coin_value < 1:
            v.append(f"coin_value must be >= 1, got {self.coin_value}")
        if self.coin_value >= self.diamond_value:
            v.append(
                f"coin_value ({self.coin_value}) must be < diamond_value ({self.diamond_value})"
            )
        if self.kill_value < 1:
            v.append(f"kill_value must be >= 1, got {self.kill_value}")
        if self.coin_spawn_period < 1 or self.diamond_spawn_period < 1:
            v.append("spawn periods must be >= 1")
        if self.max_coins < 0 or self.max_diamonds < 0:
            v.append("item maxima must be >= 0")
        if self.npc_count < 0:
            v.append(f"npc_count must be >= 0, got {self.npc_count}")
        if self.attack_range < 1:
            v.append(f"attack_range must be >= 1, got {self.attack_range}")
        if self.attack_cooldown < 0:
            v.append(f"attack_cooldown must be >= 0, got {self.attack_cooldown}")
        if self.player_health < 1:
            v.append(f"player_health must be >= 1, got {self.player_health}")
        if self.attack_damage < 1:
            v.append(f"attack_damage must be >= 1, got {self.attack_damage}")
        if self.respawn_delay < 0:
            v.append(f"respawn_delay must be >= 0, got {self.respawn_delay}")
        if self.score_ceiling <= 0:
            v.append(f"score_ceiling must be > 0, got {self.score_ceiling}")
        if self.diamond_spawn_radius <= 0:
            v.append(f"diamond_spawn_radius must be > 0, got {self.diamond_spawn_radius}")
        for cell in self.wall_layout:
            if not self._in_bounds(cell):
                v.append(f"wall cell {cell} outside the grid")
                break
        free = self.grid_width * self.grid_height - len(self.wall_layout)
        need = N_PLAYERS + self.npc_count + self.max_coins + self.max_diamonds
        if free < need:
            v.append(
                f"not enough free cells: {free} available, "
                f"{need} needed for players, NPCs and item maxima"
            )
        return v

    def _in_bounds(self, cell: Coord) -> bool:
        x, y = cell
        return 0 <= x < self.grid_width and 0 <= y < self.grid_height

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "wall_layout"}
        d["wall_layout"] = sorted([list(c) for c in self.wall_layout])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EnvConfig":
        d = dict(d)
        walls = d.pop("wall_layout", [])
        return cls(wall_layout=frozenset((int(x), int(y)) for x, y in walls), **d)


def default_score_ceiling(cfg: EnvConfig) -> int:
    """Episode-length-scaled score bound: one full item turnover plus three
    kills per 128-step cycle."""
    per_cycle = (
        cfg.max_coins * cfg.coin_value
        + cfg.max_diamonds * cfg.diamond_value
        + 3 * cfg.kill_value
    )
    cycles = max(1, cfg.episode_length // 128)
    return cycles * per_cycle


@dataclass(frozen=True)
class MapGeometry:
    """Derived map constants used by the behavior metrics."""

    d_max: float  # largest attainable distance between two cells
    n_total_visitable: int  # non-wall cell count

    @classmethod
    def from_config(cls, cfg: EnvConfig) -> "MapGeometry":
        d_max = math.hypot(cfg.grid_width - 1, cfg.grid_height - 1)
        n_total = cfg.grid_width * cfg.grid_height - len(cfg.wall_layout)
        return cls(d_max=d_max, n_total_visitable=n_total)


@dataclass
class ScoreBook:
    """Per-player score, split by source. Values are points, not counts."""

    coins: int = 0
    diamonds: int = 0
    kills: int = 0

    @property
    def total(self) -> int:
        return self.coins + self.diamonds + self.kills

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.coins, self.diamonds, self.kills)


@dataclass
class PlayerState:
    id: int
    team: str
    position: Coord
    orientation: Orientation = Orientation.UP
    health: int = 1
    alive: bool = True
    respawn_timer: int = 0
    attack_timer: int = 0
    score_book: ScoreBook = field(default_factory=ScoreBook)


def teammate_of(agent_id: int) -> int:
    """Players 0,1 are blue; 2,3 are red; teammates pair within the team."""
    return agent_id ^ 1


def enemies_of(agent_id: int) -> tuple[int, int]:
    return (2, 3) if agent_id < 2 else (0, 1)


@dataclass
class AgentEvents:
    """What happened to one agent during one step."""

    coins_collected: int = 0  # points
    diamonds_collected: int = 0  # points
    kills: int = 0  # count
    died: bool = False
    items_destroyed: int = 0  # collectibles removed by this agent's attacks
    attack_blocked: bool = False  # attack pressed while on cooldown

    def score_delta(self, cfg: EnvConfig) -> int:
        return self.coins_collected + self.diamonds_collected + self.kills * cfg.kill_value

    def to_dict(self) -> dict:
        return {
            "coins_collected": self.coins_collected,
            "diamonds_collected": self.diamonds_collected,
            "kills": self.kills,
            "died": self.died,
            "items_destroyed": self.items_destroyed,
            "attack_blocked": self.attack_blocked,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AgentEvents":
        return cls(**d)


StepEvents = tuple[AgentEvents, AgentEvents, AgentEvents, AgentEvents]


def _new_events() -> StepEvents:
    return tuple(AgentEvents() for _ in range(N_PLAYERS))


@dataclass
class GameState:
    """Full arena snapshot. Mutated in place by `step`."""

    config: EnvConfig
    geometry: MapGeometry
    players: list[PlayerState]
    npcs: list[Coord]
    coins: set[Coord]
    diamonds: set[Coord]
    timestep: int
    rng: np.random.Generator
    # cells covered by attack explosions during the most recent step
    attack_effects: set[Coord] = field(default_factory=set)

    def player(self, agent_id: int) -> PlayerState:
        return self.players[agent_id]

    def occupied_solid(self) -> set[Coord]:
        """Cells holding a solid entity: walls, live players, NPCs."""
        cells = set(self.config.wall_layout)
        cells.update(p.position for p in self.players if p.alive)
        cells.update(self.npcs)
        return cells

    def item_cells(self) -> set[Coord]:
        return self.coins | self.diamonds


def _all_cells(cfg: EnvConfig) -> list[Coord]:
    return [(x, y) for x in range(cfg.grid_width) for y in range(cfg.grid_height)]


def _free_cells(state: GameState) -> list[Coord]:
    """Sorted cells with no wall, live player, NPC, or item.

    Sorting keeps the RNG draw independent of set iteration order, which is
    what makes placement reproducible across processes.
    """
    blocked = state.occupied_solid() | state.item_cells()
    return sorted(c for c in _all_cells(state.config) if c not in blocked)


def _draw_cell(state: GameState, candidates: list[Coord]) -> Coord | None:
    if not candidates:
        return None
    idx = int(state.rng.integers(len(candidates)))
    return candidates[idx]


def reset(config: EnvConfig, seed: int) -> GameState:
    """Build the initial arena state for (config, seed).

    Players, NPCs and the initial item population are placed at random
    collision-free non-wall cells. Identical (config, seed) pairs produce
    identical states.
    """
    violations = config.validate()
    if violations:
        raise ConfigError(violations)

    state = GameState(
        config=config,
        geometry=MapGeometry.from_config(config),
        players=[],
        npcs=[],
        coins=set(),
        diamonds=set(),
        timestep=0,
        rng=np.random.default_rng(seed),
    )

    for agent_id in range(N_PLAYERS):
        cell = _draw_cell(state, _free_cells(state))
        if cell is None:
            raise ConfigError(["no free cell available for player placement"])
        state.players.append(
            PlayerState(
                id=agent_id,
                team=BLUE if agent_id < 2 else RED,
                position=cell,
                health=config.player_health,
            )
        )

    for _ in range(config.npc_count):
        cell = _draw_cell(state, _free_cells(state))
        if cell is None:
            raise ConfigError(["no free cell available for NPC placement"])
        state.npcs.append(cell)

    # Initial item population: fill up to the configured maxima.
    for _ in range(config.max_coins):
        _spawn_coin(state)
    for _ in range(config.max_diamonds):
        _spawn_diamond(state)

    return state


def step(state: GameState, joint_actions) -> tuple[GameState, StepEvents]:
    """Advance the arena by one tick with simultaneous player actions.

    Dead players' actions are ignored. Returns the mutated state together
    with the per-agent event record for the step.
    """
    if state.timestep >= state.config.episode_length:
        raise LifecycleError(
            f"episode already finished at step {state.timestep}; reset before stepping"
        )
    if len(joint_actions) != N_PLAYERS:
        raise ValueError(f"expected {N_PLAYERS} actions, got {len(joint_actions)}")
    actions = [Action(a) for a in joint_actions]

    events = _new_events()
    state.attack_effects = set()

    # Phase 1: attacks, on pre-move positions.
    for agent_id in range(N_PLAYERS):
        if actions[agent_id] is Action.ATTACK and state.players[agent_id].alive:
            resolve_attack(state, agent_id, events)

    # Phase 2: movement.
    for agent_id in range(N_PLAYERS):
        action = actions[agent_id]
        player = state.players[agent_id]
        if not player.alive or action not in _MOVE_ORIENT:
            continue
        orient = _MOVE_ORIENT[action]
        player.orientation = orient
        dx, dy = _ORIENT_DELTA[orient]
        target = (player.position[0] + dx, player.position[1] + dy)
        if state.config._in_bounds(target) and target not in state.occupied_solid():
            player.position = target

    # Phase 3: item pickup.
    for agent_id in range(N_PLAYERS):
        player = state.players[agent_id]
        if not player.alive:
            continue
        if player.position in state.coins:
            state.coins.discard(player.position)
            player.score_book.coins += state.config.coin_value
            events[agent_id].coins_collected += state.config.coin_value
        elif player.position in state.diamonds:
            state.diamonds.discard(player.position)
            player.score_book.diamonds += state.config.diamond_value
            events[agent_id].diamonds_collected += state.config.diamond_value

    # Phase 4: NPC movement, then lethal contact.
    advance_npcs(state, events)

    # Phase 5: spawns, keyed to the timestep value this step ends on.
    spawn_items(state)

    # Phase 6: clock, cooldowns, respawns.
    state.timestep += 1
    for player in state.players:
        if player.attack_timer > 0:
            player.attack_timer -= 1
        if not player.alive:
            if player.respawn_timer > 0:
                player.respawn_timer -= 1
            elif player.respawn_timer == 0:
                _respawn(state, player)

    return state, events


def resolve_attack(state: GameState, attacker_id: int, events: StepEvents | None = None) -> StepEvents:
    """Fire the attacker's directional attack and apply its outcome.

    The explosion travels from the cell in front of the attacker up to
    attack_range cells; the first blocking object resolves it:

      wall      -> nothing (obstacles impede the attack)
      teammate  -> nothing (friendly fire is not allowed)
      NPC       -> nothing (NPCs are immune, but absorb the blast)
      enemy     -> damage; a kill credits kill_value to the attacker
      coin/diamond -> removed from the map

    An attack pressed during cooldown is a no-op recorded in the events.
    """
    if events is None:
        events = _new_events()
    attacker = state.players[attacker_id]
    if not attacker.alive:
        return events
    if attacker.attack_timer > 0:
        events[attacker_id].attack_blocked = True
        return events
    attacker.attack_timer = state.config.attack_cooldown

    live_positions = {
        p.position: p for p in state.players if p.alive and p.id != attacker_id
    }
    npc_cells = set(state.npcs)
    dx, dy = _ORIENT_DELTA[attacker.orientation]
    x, y = attacker.position
    for _ in range(state.config.attack_range):
        x, y = x + dx, y + dy
        cell = (x, y)
        if not state.config._in_bounds(cell):
            break
        state.attack_effects.add(cell)
        if cell in state.config.wall_layout:
            break
        victim = live_positions.get(cell)
        if victim is not None:
            if victim.team != attacker.team:
                victim.health -= state.config.attack_damage
                if victim.health <= 0:
                    _kill(state, victim, events)
                    attacker.score_book.kills += state.config.kill_value
                    events[attacker_id].kills += 1
            break
        if cell in npc_cells:
            break
        if cell in state.coins:
            state.coins.discard(cell)
            events[attacker_id].items_destroyed += 1
            break
        if cell in state.diamonds:
            state.diamonds.discard(cell)
            events[attacker_id].items_destroyed += 1
            break
    return events


def advance_npcs(state: GameState, events: StepEvents | None = None) -> GameState:
    """Move every NPC one cell in a uniformly random legal direction, then
    kill any player sharing a cell with an NPC.

    Legal NPC moves avoid walls, the grid edge and other NPCs; player cells
    are deliberately legal, which is how NPCs kill. A fully blocked NPC
    stays put.
    """
    if events is None:
        events = _new_events()
    for i, cell in enumerate(state.npcs):
        others = {c for j, c in enumerate(state.npcs) if j != i}
        options = []
        for orient in (Orientation.UP, Orientation.DOWN, Orientation.LEFT, Orientation.RIGHT):
            dx, dy = _ORIENT_DELTA[orient]
            nxt = (cell[0] + dx, cell[1] + dy)
            if (
                state.config._in_bounds(nxt)
                and nxt not in state.config.wall_layout
                and nxt not in others
            ):
                options.append(nxt)
        if options:
            state.npcs[i] = options[int(state.rng.integers(len(options)))]

    npc_cells = set(state.npcs)
    for player in state.players:
        if player.alive and player.position in npc_cells:
            _kill(state, player, events)
    return state


def spawn_items(state: GameState) -> GameState:
    """Spawn collectibles on their periods, keyed to the ending timestep.

    Coins appear on any free cell; diamonds only within
    diamond_spawn_radius (Euclidean) of some NPC. A spawn with no eligible
    cell is skipped silently.
    """
    t = state.timestep + 1
    if t % state.config.coin_spawn_period == 0 and len(state.coins) < state.config.max_coins:
        _spawn_coin(state)
    if (
        t % state.config.diamond_spawn_period == 0
        and len(state.diamonds) < state.config.max_diamonds
    ):
        _spawn_diamond(state)
    return state


def _spawn_coin(state: GameState) -> None:
    cell = _draw_cell(state, _free_cells(state))
    if cell is not None:
        state.coins.add(cell)


def _spawn_diamond(state: GameState) -> None:
    radius = state.config.diamond_spawn_radius
    eligible = [
        c
        for c in _free_cells(state)
        if any(math.hypot(c[0] - n[0], c[1] - n[1]) <= radius for n in state.npcs)
    ]
    cell = _draw_cell(state, eligible)
    if cell is not None:
        state.diamonds.add(cell)


def _kill(state: GameState, victim: PlayerState, events: StepEvents) -> None:
    victim.health = 0
    victim.alive = False
    victim.respawn_timer = state.config.respawn_delay
    events[victim.id].died = True


def _respawn(state: GameState, player: PlayerState) -> None:
    cell = _draw_cell(state, _free_cells(state))
    if cell is None:
        # No room this tick; try again next step.
        player.respawn_timer = 1
        return
    player.position = cell
    player.health = state.config.player_health
    player.alive = True


# --- canonical serialization and hashing -------------------------------------

def config_hash(config: EnvConfig) -> str:
    payload = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def state_snapshot(state: GameState) -> dict:
    """Canonical, JSON-stable view of the full state (including RNG)."""
    return {
        "timestep": state.timestep,
        "players": [
            {
                "id": p.id,
                "team": p.team,
                "position": list(p.position),
                "orientation": int(p.orientation),
                "health": p.health,
                "alive": p.alive,
                "respawn_timer": p.respawn_timer,
                "attack_timer": p.attack_timer,
                "scores": list(p.score_book.as_tuple()),
            }
            for p in state.players
        ],
        "npcs": [list(c) for c in state.npcs],
        "coins": sorted([list(c) for c in state.coins]),
        "diamonds": sorted([list(c) for c in state.diamonds]),
        "attack_effects": sorted([list(c) for c in state.attack_effects]),
        "rng": _rng_state_dict(state.rng),
    }


def state_hash(state: GameState) -> str:
    payload = json.dumps(
        {"config": config_hash(state.config), "state": state_snapshot(state)},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:32]


def _rng_state_dict(rng: np.random.Generator) -> dict:
    st = rng.bit_generator.state
    return {
        "bit_generator": st["bit_generator"],
        "state": int(st["state"]["state"]),
        "inc": int(st["state"]["inc"]),
        "has_uint32": int(st["has_uint32"]),
        "uinteger": int(st["uinteger"]),
    }
