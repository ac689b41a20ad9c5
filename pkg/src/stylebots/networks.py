"""Actor-critic network over grid + vector observations.

Layout: a small convolutional encoder over the grid planes (leaky ReLU),
flattened and concatenated with the scalar block and both behavior
vectors, then a stack of gated (GLU) fully connected layers feeding two
heads: action logits and a scalar value.

All parameter initialization is driven by an explicit torch.Generator, so
a (spec, seed) pair always yields bit-identical weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn as nn
import torch.nn.functional as F

from .observations import ObsSpec

N_ACTIONS = 6


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture knobs. conv_layers entries are (channels, kernel, stride)."""

    conv_layers: tuple[tuple[int, int, int], ...] = ((16, 3, 2), (32, 3, 2))
    hidden_sizes: tuple[int, ...] = (128, 128)

    def validate(self) -> list[str]:
        v = []
        if not self.conv_layers:
            v.append("at least one conv layer is required")
        for c, k, s in self.conv_layers:
            if c < 1 or k < 1 or s < 1:
                v.append(f"conv layer ({c},{k},{s}) has a non-positive entry")
        if not self.hidden_sizes or any(h < 1 for h in self.hidden_sizes):
            v.append(f"hidden_sizes must be positive, got {self.hidden_sizes}")
        return v

    def to_dict(self) -> dict:
        return {
            "conv_layers": [list(t) for t in self.conv_layers],
            "hidden_sizes": list(self.hidden_sizes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        return cls(
            conv_layers=tuple(tuple(int(x) for x in t) for t in d["conv_layers"]),
            hidden_sizes=tuple(int(h) for h in d["hidden_sizes"]),
        )


class GatedLinear(nn.Module):
    """Linear layer with a GLU nonlinearity: half the outputs gate the other half."""

    def __init__(self, in_features: int, out_features: int):
        super().__init__()
        self.linear = nn.Linear(in_features, 2 * out_features)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return F.glu(self.linear(x), dim=-1)


class ActorCritic(nn.Module):
    def __init__(self, obs_spec: ObsSpec, net_spec: NetworkSpec):
        super().__init__()
        self.obs_spec = obs_spec
        self.net_spec = net_spec

        convs = []
        in_ch = obs_spec.grid_channels
        h, w = obs_spec.grid_height, obs_spec.grid_width
        for out_ch, kernel, stride in net_spec.conv_layers:
            convs.append(nn.Conv2d(in_ch, out_ch, kernel, stride))
            in_ch = out_ch
            h = (h - kernel) // stride + 1
            w = (w - kernel) // stride + 1
            if h < 1 or w < 1:
                raise ValueError(
                    f"conv stack shrinks the {obs_spec.grid_height}x{obs_spec.grid_width} "
                    f"grid below 1x1; use fewer/smaller layers"
                )
        self.convs = nn.ModuleList(convs)
        self.conv_out = in_ch * h * w

        trunk = []
        width = self.conv_out + obs_spec.state_dim + 2 * obs_spec.behavior_dim
        for hidden in net_spec.hidden_sizes:
            trunk.append(GatedLinear(width, hidden))
            width = hidden
        self.trunk = nn.ModuleList(trunk)

        self.actor_head = nn.Linear(width, N_ACTIONS)
        self.critic_head = nn.Linear(width, 1)

    def forward(
        self,
        grid: torch.Tensor,
        state_vec: torch.Tensor,
        behavior_current: torch.Tensor,
        behavior_target: torch.Tensor,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Return (action logits, value) for a batch of observations."""
        x = grid
        for conv in self.convs:
            x = F.leaky_relu(conv(x))
        x = torch.cat(
            [x.flatten(1), state_vec, behavior_current, behavior_target], dim=-1
        )
        for layer in self.trunk:
            x = layer(x)
        return self.actor_head(x), self.critic_head(x).squeeze(-1)


def build_network(obs_spec: ObsSpec, net_spec: NetworkSpec, seed: int) -> ActorCritic:
    """Construct and deterministically initialize an actor-critic network.

    Orthogonal weights everywhere, zero biases. The actor head gets a tiny
    gain so the initial policy is near uniform (its entropy starts within a
    fraction of a percent of the uniform maximum), which keeps early
    exploration broad.
    """
    violations = net_spec.validate()
    if violations:
        raise ValueError("; ".join(violations))
    net = ActorCritic(obs_spec, net_spec)
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for module in net.modules():
            if isinstance(module, (nn.Conv2d, nn.Linear)):
                gain = 2.0 ** 0.5
                if module is net.actor_head:
                    gain = 0.01
                elif module is net.critic_head:
                    gain = 1.0
                _orthogonal(module.weight, gain, gen)
                nn.init.zeros_(module.bias)
    return net


def _orthogonal(tensor: torch.Tensor, gain: float, gen: torch.Generator) -> None:
    nn.init.orthogonal_(tensor, gain=gain, generator=gen)
