"""Action-selection wrappers around networks, plus scripted baselines.

A policy exposes `act_batch(observations, rng) -> (actions, log_probs,
values)`. Network-backed policies run one batched forward; scripted
policies exist for tests and baselines.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F

from .errors import NumericsError
from .networks import N_ACTIONS, ActorCritic
from .observations import Observation


def batch_observations(observations: list[Observation]) -> tuple[torch.Tensor, ...]:
    grid = torch.from_numpy(np.stack([o.grid for o in observations]))
    state_vec = torch.from_numpy(np.stack([o.state_vec for o in observations]))
    b_curr = torch.from_numpy(np.stack([o.behavior_current for o in observations]))
    b_target = torch.from_numpy(np.stack([o.behavior_target for o in observations]))
    return grid, state_vec, b_curr, b_target


class NetworkPolicy:
    """Samples from the network's action distribution.

    Sampling uses the policy's own torch.Generator (seeded at
    construction), never torch's global RNG. `greedy=True` switches to
    argmax, for deterministic evaluation rollouts.
    """

    def __init__(self, network: ActorCritic, seed: int = 0, greedy: bool = False):
        self.network = network
        self.greedy = greedy
        self._gen = torch.Generator().manual_seed(seed)

    @torch.no_grad()
    def act_batch(
        self, observations: list[Observation]
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        logits, values = self.network(*batch_observations(observations))
        if not bool(torch.isfinite(logits).all()):
            raise NumericsError("network produced non-finite action logits")
        log_probs = F.log_softmax(logits, dim=-1)
        if self.greedy:
            actions = logits.argmax(dim=-1)
        else:
            actions = torch.multinomial(
                log_probs.exp(), num_samples=1, generator=self._gen
            ).squeeze(1)
        chosen = log_probs.gather(1, actions.unsqueeze(1)).squeeze(1)
        return (
            actions.numpy().astype(np.int64),
            chosen.numpy().astype(np.float64),
            values.numpy().astype(np.float64),
        )


class RandomPolicy:
    """Uniform over the action set; log-prob and value are reported exactly."""

    def __init__(self, seed: int = 0):
        self._rng = np.random.default_rng(seed)

    def act_batch(
        self, observations: list[Observation]
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = len(observations)
        actions = self._rng.integers(0, N_ACTIONS, size=n)
        log_probs = np.full(n, -np.log(N_ACTIONS))
        return actions, log_probs, np.zeros(n)


class ScriptedPolicy:
    """Replays a fixed action function of the step index (tests only)."""

    def __init__(self, fn):
        self._fn = fn
        self._t = 0

    def act_batch(
        self, observations: list[Observation]
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = len(observations)
        actions = np.array([self._fn(self._t, i) for i in range(n)], dtype=np.int64)
        self._t += 1
        return actions, np.zeros(n), np.zeros(n)
