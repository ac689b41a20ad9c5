"""Reward signals for the two training modes.

`alignment_reward` pays for progress toward a behavior target: the step
reward is the reduction in Euclidean distance between the agent's running
behavior vector and its target, normalized by the target's norm and scaled
by a constant. Summed over an episode the rewards telescope, so the return
depends only on the first and last behavior vectors; starting from the
zero vector, the return is bounded above by the scale constant, reached
exactly when the final behavior matches the target.

`score_reward` is the plain win-oriented alternative: normalized points
gained this step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arena import AgentEvents, EnvConfig
from .behavior import BehaviorVector


@dataclass(frozen=True)
class RewardParams:
    scale: float = 1.0

    def validate(self) -> list[str]:
        if not (self.scale > 0.0 and np.isfinite(self.scale)):
            return [f"scale must be a finite positive number, got {self.scale}"]
        return []


def alignment_reward(
    prev: BehaviorVector,
    curr: BehaviorVector,
    target: BehaviorVector,
    params: RewardParams = RewardParams(),
) -> float:
    """Distance-reduction reward toward the behavior target."""
    t = target.as_array()
    norm_t = float(np.linalg.norm(t))
    if norm_t == 0.0:
        raise ValueError("target vector must have nonzero norm")
    d_prev = float(np.linalg.norm(prev.as_array() - t))
    d_curr = float(np.linalg.norm(curr.as_array() - t))
    return params.scale * (d_prev - d_curr) / norm_t


def score_reward(events: AgentEvents, config: EnvConfig) -> float:
    """Points gained this step over the score ceiling."""
    return events.score_delta(config) / config.score_ceiling
