"""PPO with clipped surrogate objective and GAE advantages.

The buffer accumulates transitions from several (env, agent) streams; an
update runs once the buffer is full, consumes it, and clears it. Learning
rate decays linearly over the training run; the entropy bonus is constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn.functional as F

from .errors import NumericsError
from .networks import ActorCritic


@dataclass(frozen=True)
class Hyperparams:
    batch_size: int = 1024
    buffer_size: int = 10240
    learning_rate: float = 3.0e-4
    lr_schedule: str = "linear"  # "linear" decays to zero; "constant" holds
    entropy_beta: float = 5.0e-3
    clip_epsilon: float = 0.2
    gae_lambda: float = 0.95
    gamma: float = 0.99
    epochs_per_update: int = 3
    value_loss_coef: float = 0.5

    def validate(self) -> list[str]:
        v = []
        if self.batch_size < 1:
            v.append(f"batch_size must be >= 1, got {self.batch_size}")
        elif self.buffer_size < self.batch_size:
            v.append(
                f"buffer_size ({self.buffer_size}) must be >= batch_size ({self.batch_size})"
            )
        elif self.buffer_size % self.batch_size != 0:
            v.append(
                f"buffer_size ({self.buffer_size}) must be a multiple of "
                f"batch_size ({self.batch_size})"
            )
        if not (0 < self.learning_rate < 1):
            v.append(f"learning_rate must lie in (0, 1), got {self.learning_rate}")
        if self.lr_schedule not in ("linear", "constant"):
            v.append(
                f"lr_schedule must be 'linear' or 'constant', got {self.lr_schedule!r}"
            )
        if self.entropy_beta < 0:
            v.append(f"entropy_beta must be >= 0, got {self.entropy_beta}")
        if not (0 < self.clip_epsilon < 1):
            v.append(f"clip_epsilon must lie in (0, 1), got {self.clip_epsilon}")
        if not (0 <= self.gae_lambda <= 1):
            v.append(f"gae_lambda must lie in [0, 1], got {self.gae_lambda}")
        if not (0 < self.gamma <= 1):
            v.append(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.epochs_per_update < 1:
            v.append(f"epochs_per_update must be >= 1, got {self.epochs_per_update}")
        if self.value_loss_coef < 0:
            v.append(f"value_loss_coef must be >= 0, got {self.value_loss_coef}")
        return v

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparams":
        return cls(**d)


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    bootstrap_value: float,
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimation over one stream of transitions.

    `dones[t]` marks a terminal transition: the value beyond it does not
    bootstrap. `bootstrap_value` is the critic's estimate for the state
    after the final transition (ignored when that transition is terminal).
    Returns (advantages, value targets), both float64.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    n = len(rewards)
    if values.shape != (n,) or dones.shape != (n,):
        raise ValueError("rewards, values and dones must have equal length")
    adv = np.zeros(n, dtype=np.float64)
    gae = 0.0
    for t in range(n - 1, -1, -1):
        next_value = bootstrap_value if t == n - 1 else values[t + 1]
        nonterminal = 0.0 if dones[t] else 1.0
        delta = rewards[t] + gamma * next_value * nonterminal - values[t]
        gae = delta + gamma * lam * nonterminal * gae
        adv[t] = gae
    return adv, adv + values


@dataclass
class _Stream:
    """Transitions from one (env, agent) pair, in step order."""

    grids: list = field(default_factory=list)
    state_vecs: list = field(default_factory=list)
    b_currs: list = field(default_factory=list)
    b_targets: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    log_probs: list = field(default_factory=list)
    values: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    dones: list = field(default_factory=list)
    bootstrap_value: float = 0.0

    def __len__(self) -> int:
        return len(self.actions)


class RolloutBuffer:
    """Collects fixed-capacity rollouts keyed by (env, agent) stream."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._streams: dict[tuple[int, int], _Stream] = {}
        self._count = 0

    def __len__(self) -> int:
        return self._count

    @property
    def full(self) -> bool:
        return self._count >= self.capacity

    def add(
        self,
        stream_key: tuple[int, int],
        grid: np.ndarray,
        state_vec: np.ndarray,
        b_curr: np.ndarray,
        b_target: np.ndarray,
        action: int,
        log_prob: float,
        value: float,
        reward: float,
        done: bool,
    ) -> None:
        s = self._streams.setdefault(stream_key, _Stream())
        s.grids.append(grid)
        s.state_vecs.append(state_vec)
        s.b_currs.append(b_curr)
        s.b_targets.append(b_target)
        s.actions.append(action)
        s.log_probs.append(log_prob)
        s.values.append(value)
        s.rewards.append(reward)
        s.dones.append(done)
        self._count += 1

    def set_bootstrap(self, stream_key: tuple[int, int], value: float) -> None:
        self._streams[stream_key].bootstrap_value = value

    def clear(self) -> None:
        self._streams = {}
        self._count = 0

    def to_tensors(self, gamma: float, lam: float) -> dict[str, torch.Tensor]:
        """Finalize the buffer: run GAE per stream and flatten everything.

        Streams are concatenated in sorted key order so the flattened
        layout is deterministic.
        """
        if self._count == 0:
            raise ValueError("buffer is empty")
        grids, state_vecs, b_currs, b_targets = [], [], [], []
        actions, log_probs, advs, returns = [], [], [], []
        for key in sorted(self._streams):
            s = self._streams[key]
            adv, ret = compute_gae(
                np.array(s.rewards),
                np.array(s.values),
                np.array(s.dones),
                s.bootstrap_value,
                gamma,
                lam,
            )
            grids.extend(s.grids)
            state_vecs.extend(s.state_vecs)
            b_currs.extend(s.b_currs)
            b_targets.extend(s.b_targets)
            actions.extend(s.actions)
            log_probs.extend(s.log_probs)
            advs.append(adv)
            returns.append(ret)
        return {
            "grid": torch.from_numpy(np.stack(grids)).float(),
            "state_vec": torch.from_numpy(np.stack(state_vecs)).float(),
            "b_curr": torch.from_numpy(np.stack(b_currs)).float(),
            "b_target": torch.from_numpy(np.stack(b_targets)).float(),
            "action": torch.tensor(actions, dtype=torch.long),
            "old_log_prob": torch.tensor(log_probs, dtype=torch.float32),
            "advantage": torch.from_numpy(np.concatenate(advs)).float(),
            "value_target": torch.from_numpy(np.concatenate(returns)).float(),
        }


@dataclass
class UpdateStats:
    policy_loss: float
    value_loss: float
    entropy: float
    learning_rate: float


class PPOTrainer:
    def __init__(
        self,
        network: ActorCritic,
        hyper: Hyperparams,
        total_steps: int,
        shuffle_seed: int,
    ):
        violations = hyper.validate()
        if violations:
            raise ValueError("; ".join(violations))
        self.network = network
        self.hyper = hyper
        self.total_steps = max(1, total_steps)
        self.steps_done = 0
        self.optimizer = torch.optim.Adam(network.parameters(), lr=hyper.learning_rate)
        self._shuffle_gen = torch.Generator().manual_seed(shuffle_seed)

    def current_lr(self) -> float:
        """Step-size for the next update under the configured schedule."""
        if self.hyper.lr_schedule == "constant":
            return self.hyper.learning_rate
        frac = min(1.0, self.steps_done / self.total_steps)
        return self.hyper.learning_rate * (1.0 - frac)

    def update(self, buffer: RolloutBuffer) -> UpdateStats:
        """One PPO update over the full buffer; the buffer is cleared after.

        Advantages are normalized over the whole buffer. Non-finite losses
        abort the run rather than silently corrupting the weights.
        """
        hp = self.hyper
        data = buffer.to_tensors(hp.gamma, hp.gae_lambda)
        n = data["action"].shape[0]

        adv = data["advantage"]
        adv = (adv - adv.mean()) / (adv.std(unbiased=False) + 1e-8)

        lr = self.current_lr()
        for group in self.optimizer.param_groups:
            group["lr"] = lr

        policy_losses, value_losses, entropies = [], [], []
        for _ in range(hp.epochs_per_update):
            perm = torch.randperm(n, generator=self._shuffle_gen)
            for start in range(0, n, hp.batch_size):
                idx = perm[start : start + hp.batch_size]
                logits, values = self.network(
                    data["grid"][idx],
                    data["state_vec"][idx],
                    data["b_curr"][idx],
                    data["b_target"][idx],
                )
                log_probs = F.log_softmax(logits, dim=-1)
                new_log_prob = log_probs.gather(
                    1, data["action"][idx].unsqueeze(1)
                ).squeeze(1)
                entropy = -(log_probs.exp() * log_probs).sum(-1).mean()

                ratio = torch.exp(new_log_prob - data["old_log_prob"][idx])
                batch_adv = adv[idx]
                surr1 = ratio * batch_adv
                surr2 = (
                    torch.clamp(ratio, 1.0 - hp.clip_epsilon, 1.0 + hp.clip_epsilon)
                    * batch_adv
                )
                policy_loss = -torch.min(surr1, surr2).mean()
                value_loss = F.mse_loss(values, data["value_target"][idx])
                loss = (
                    policy_loss
                    + hp.value_loss_coef * value_loss
                    - hp.entropy_beta * entropy
                )
                if not torch.isfinite(loss):
                    raise NumericsError(
                        f"non-finite loss at step {self.steps_done}: "
                        f"policy={policy_loss.item():.6g} value={value_loss.item():.6g} "
                        f"entropy={entropy.item():.6g}"
                    )
                self.optimizer.zero_grad()
                loss.backward()
                self.optimizer.step()

                policy_losses.append(policy_loss.item())
                value_losses.append(value_loss.item())
                entropies.append(entropy.item())

        self.steps_done += n
        buffer.clear()
        return UpdateStats(
            policy_loss=float(np.mean(policy_losses)),
            value_loss=float(np.mean(value_losses)),
            entropy=float(np.mean(entropies)),
            learning_rate=lr,
        )


def ppo_loss_terms(
    network: ActorCritic,
    grid: torch.Tensor,
    state_vec: torch.Tensor,
    b_curr: torch.Tensor,
    b_target: torch.Tensor,
    action: torch.Tensor,
    old_log_prob: torch.Tensor,
    advantage: torch.Tensor,
    value_target: torch.Tensor,
    clip_epsilon: float,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Pure loss computation (policy, value, entropy) for a given batch.

    Shared by the trainer-equivalent gradient checks; performs no
    normalization or optimizer stepping.
    """
    logits, values = network(grid, state_vec, b_curr, b_target)
    log_probs = F.log_softmax(logits, dim=-1)
    new_log_prob = log_probs.gather(1, action.unsqueeze(1)).squeeze(1)
    entropy = -(log_probs.exp() * log_probs).sum(-1).mean()
    ratio = torch.exp(new_log_prob - old_log_prob)
    surr1 = ratio * advantage
    surr2 = torch.clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon) * advantage
    policy_loss = -torch.min(surr1, surr2).mean()
    value_loss = F.mse_loss(values, value_target)
    return policy_loss, value_loss, entropy
