"""Style-conditioned agents for a 2v2 grid arena.

The package trains a single PPO policy that, conditioned on a random
six-dimensional behavior target each episode, learns to realize whatever
play style the target describes, and ships the simulator, reward,
evaluation, and reporting machinery around it.
"""

__version__ = "0.1.0"

from .arena import Action, EnvConfig, GameState, reset, step
from .behavior import BehaviorAccumulator, BehaviorVector, TargetVector, sample_target
from .config import RunConfig, load_config
from .rewards import RewardParams, alignment_reward, score_reward

__all__ = [
    "__version__",
    "Action",
    "EnvConfig",
    "GameState",
    "reset",
    "step",
    "BehaviorAccumulator",
    "BehaviorVector",
    "TargetVector",
    "sample_target",
    "RunConfig",
    "load_config",
    "RewardParams",
    "alignment_reward",
    "score_reward",
]
