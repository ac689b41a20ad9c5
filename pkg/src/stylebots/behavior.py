"""Six-dimensional behavior descriptors and their online accumulation.

A behavior vector summarizes how an agent played, in six normalized
dimensions:

    coin_ratio         share of score earned from coins
    diamond_ratio      share of score earned from diamonds
    kill_ratio         share of score earned from kills
    dominance          total score over the configured ceiling, clipped to 1
    teammate_distance  mean distance to the teammate over d_max
    mobility           fraction of visitable cells the agent entered

The three ratios sum to 1 whenever any score exists and are all zero for a
scoreless agent. Targets for conditioning are drawn by `sample_target`,
whose ratio components always sum to 1 exactly (bitwise, not just within
rounding).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arena import Coord, GameState, MapGeometry, teammate_of

N_DIMS = 6
DIM_NAMES = (
    "coin_ratio",
    "diamond_ratio",
    "kill_ratio",
    "dominance",
    "teammate_distance",
    "mobility",
)


@dataclass(frozen=True)
class BehaviorVector:
    coin_ratio: float
    diamond_ratio: float
    kill_ratio: float
    dominance: float
    teammate_distance: float
    mobility: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.coin_ratio,
                self.diamond_ratio,
                self.kill_ratio,
                self.dominance,
                self.teammate_distance,
                self.mobility,
            ],
            dtype=np.float64,
        )

    @classmethod
    def from_array(cls, arr) -> "BehaviorVector":
        a = np.asarray(arr, dtype=np.float64)
        if a.shape != (N_DIMS,):
            raise ValueError(f"expected shape ({N_DIMS},), got {a.shape}")
        return cls(*(float(x) for x in a))

    @classmethod
    def zero(cls) -> "BehaviorVector":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


class TargetVector(BehaviorVector):
    """A behavior vector intended as a conditioning goal.

    Construction does not validate (tests build deliberately odd vectors);
    call `validate` to check the goal-vector constraints.
    """

    def validate(self) -> list[str]:
        v = []
        arr = self.as_array()
        if not np.all(np.isfinite(arr)):
            v.append("target components must be finite")
            return v
        for name, x in zip(DIM_NAMES, arr):
            if not (0.0 <= x <= 1.0):
                v.append(f"{name} must lie in [0, 1], got {x}")
        ratio_sum = self.coin_ratio + self.diamond_ratio + self.kill_ratio
        if ratio_sum != 1.0:
            v.append(f"score ratios must sum to exactly 1, got {ratio_sum!r}")
        if float(np.linalg.norm(arr)) == 0.0:
            v.append("target must have nonzero norm")
        return v


def sample_target(rng: np.random.Generator) -> TargetVector:
    """Draw a random conditioning target.

    The first ratio is uniform on [0, 1], the second uniform on the
    remainder, and the third takes whatever is left, so the three sum to
    1.0 exactly. Dominance is uniform on [0, 1]; the two spatial dimensions
    are uniform on [0.15, 1] to keep degenerate goals (stand perfectly
    still, hug the teammate) out of the pool.
    """
    b1 = float(rng.uniform(0.0, 1.0))
    # Scaling the second draw by the remainder (rather than re-ranging the
    # uniform) is what makes b1 + b2 + b3 == 1.0 hold bitwise.
    b2 = float(rng.uniform(0.0, 1.0)) * (1.0 - b1)
    b3 = 1.0 - (b1 + b2)
    b4 = float(rng.uniform(0.0, 1.0))
    b5 = float(rng.uniform(0.15, 1.0))
    b6 = float(rng.uniform(0.15, 1.0))
    return TargetVector(b1, b2, b3, b4, b5, b6)


@dataclass
class BehaviorAccumulator:
    """Streams one agent's behavior statistics across an episode.

    Scores are read straight from the agent's score book; the accumulator
    only has to track the spatial statistics (visited cells and the running
    teammate-distance mean). Call `observe_step` once per environment step,
    after the step resolves.
    """

    agent_id: int
    geometry: MapGeometry
    score_ceiling: int
    visited: set[Coord]
    distance_sum: float = 0.0
    steps_observed: int = 0
    last_teammate_distance: float = 0.0

    @classmethod
    def start(cls, state: GameState, agent_id: int) -> "BehaviorAccumulator":
        me = state.player(agent_id)
        mate = state.player(teammate_of(agent_id))
        acc = cls(
            agent_id=agent_id,
            geometry=state.geometry,
            score_ceiling=state.config.score_ceiling,
            visited={me.position},
        )
        acc.last_teammate_distance = _distance(me.position, mate.position)
        return acc

    def observe_step(self, state: GameState) -> None:
        me = state.player(self.agent_id)
        mate = state.player(teammate_of(self.agent_id))
        if me.alive:
            self.visited.add(me.position)
        if me.alive and mate.alive:
            # Distance freezes at its last live value while either player
            # is dead, so respawn waits do not drag the mean toward zero.
            self.last_teammate_distance = _distance(me.position, mate.position)
        self.distance_sum += self.last_teammate_distance
        self.steps_observed += 1

    def current(self, state: GameState) -> BehaviorVector:
        if self.steps_observed < 1:
            raise ValueError("no steps observed yet; behavior is undefined at reset")
        book = state.player(self.agent_id).score_book
        s_c, s_d, s_k = book.coins, book.diamonds, book.kills
        total = s_c + s_d + s_k
        if total > 0:
            b1, b2, b3 = s_c / total, s_d / total, s_k / total
        else:
            b1 = b2 = b3 = 0.0
        b4 = min(1.0, total / self.score_ceiling)
        b5 = (self.distance_sum / self.steps_observed) / self.geometry.d_max
        b6 = len(self.visited) / self.geometry.n_total_visitable
        return BehaviorVector(b1, b2, b3, b4, b5, b6)


def _distance(a: Coord, b: Coord) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])
