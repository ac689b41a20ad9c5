"""Advantage estimation and the PPO update loop."""

import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from stylebots.errors import NumericsError
from stylebots.networks import NetworkSpec, build_network
from stylebots.observations import ObsSpec
from stylebots.ppo import (
    Hyperparams,
    PPOTrainer,
    RolloutBuffer,
    compute_gae,
    ppo_loss_terms,
)

floats = st.floats(-5.0, 5.0, allow_nan=False, width=64)


def gae_oracle(rewards, values, dones, bootstrap, gamma, lam):
    """O(n^2) forward-sum definition of the advantage, for cross-checking."""
    n = len(rewards)
    deltas = []
    for t in range(n):
        if dones[t]:
            next_v = 0.0
        elif t + 1 < n:
            next_v = values[t + 1]
        else:
            next_v = bootstrap
        deltas.append(rewards[t] + gamma * next_v - values[t])
    adv = []
    for t in range(n):
        total, coef = 0.0, 1.0
        for l in range(t, n):
            total += coef * deltas[l]
            if dones[l]:
                break
            coef *= gamma * lam
        adv.append(total)
    return np.array(adv)


class TestGAE:
    @settings(max_examples=150, deadline=None)
    @given(
        data=st.lists(
            st.tuples(floats, floats, st.booleans()), min_size=1, max_size=64
        ),
        bootstrap=floats,
        gamma=st.floats(0.5, 1.0),
        lam=st.floats(0.0, 1.0),
    )
    def test_matches_forward_sum_oracle(self, data, bootstrap, gamma, lam):
        rewards = np.array([d[0] for d in data])
        values = np.array([d[1] for d in data])
        dones = np.array([d[2] for d in data])
        adv, ret = compute_gae(rewards, values, dones, bootstrap, gamma, lam)
        want = gae_oracle(rewards, values, dones, bootstrap, gamma, lam)
        assert np.max(np.abs(adv - want)) <= 1e-9
        assert np.max(np.abs(ret - (want + values))) <= 1e-9

    def test_monte_carlo_special_case(self):
        # gamma = lam = 1, no terminals: advantage is the full return
        # (plus bootstrap) minus the value
        rng = np.random.default_rng(0)
        rewards = rng.normal(size=20)
        values = rng.normal(size=20)
        dones = np.zeros(20, dtype=bool)
        adv, _ = compute_gae(rewards, values, dones, 0.5, 1.0, 1.0)
        for t in range(20):
            assert adv[t] == pytest.approx(rewards[t:].sum() + 0.5 - values[t], abs=1e-9)

    def test_terminal_cuts_the_stream(self):
        rewards = np.array([1.0, 1.0, 1.0, 1.0])
        values = np.zeros(4)
        dones = np.array([False, True, False, False])
        adv, _ = compute_gae(rewards, values, dones, 99.0, 0.9, 0.9)
        # nothing after t=1 leaks into t<=1
        assert adv[0] == pytest.approx(1.0 + 0.9 * 0.9 * 1.0)
        assert adv[1] == pytest.approx(1.0)

    def test_terminal_final_step_ignores_bootstrap(self):
        adv_a, _ = compute_gae([1.0], [0.0], [True], 123.0, 0.99, 0.95)
        adv_b, _ = compute_gae([1.0], [0.0], [True], -7.0, 0.99, 0.95)
        assert adv_a[0] == adv_b[0] == 1.0

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            compute_gae([1.0, 2.0], [0.0], [False], 0.0, 0.99, 0.95)


class TestHyperparams:
    def test_defaults_valid(self):
        assert Hyperparams().validate() == []

    def test_violations_collected(self):
        bad = Hyperparams(batch_size=0, clip_epsilon=2.0, gamma=0.0)
        assert len(bad.validate()) >= 3

    def test_buffer_must_be_batch_multiple(self):
        assert Hyperparams(batch_size=100, buffer_size=250).validate()
        assert Hyperparams(batch_size=100, buffer_size=300).validate() == []

    def test_dict_roundtrip(self):
        hp = Hyperparams(learning_rate=1e-4, epochs_per_update=5)
        assert Hyperparams.from_dict(hp.to_dict()) == hp


OBS = ObsSpec(grid_channels=2, grid_width=4, grid_height=4, state_dim=3, behavior_dim=6)
NET = NetworkSpec(conv_layers=((4, 3, 1),), hidden_sizes=(16,))


def fill_buffer(buffer, n_streams=2, steps=None, seed=0, reward_override=None):
    rng = np.random.default_rng(seed)
    steps = steps if steps is not None else buffer.capacity // n_streams
    for key in range(n_streams):
        for t in range(steps):
            reward = float(rng.normal()) if reward_override is None else reward_override
            buffer.add(
                (0, key),
                rng.random((OBS.grid_channels, OBS.grid_height, OBS.grid_width)).astype(np.float32),
                rng.random(OBS.state_dim).astype(np.float32),
                rng.random(OBS.behavior_dim).astype(np.float32),
                rng.random(OBS.behavior_dim).astype(np.float32),
                int(rng.integers(6)),
                float(-math.log(6)),
                float(rng.normal()),
                reward,
                bool(t == steps - 1),
            )
    return buffer


class TestRolloutBuffer:
    def test_fill_and_clear(self):
        buf = RolloutBuffer(8)
        assert len(buf) == 0 and not buf.full
        fill_buffer(buf)
        assert len(buf) == 8 and buf.full
        buf.clear()
        assert len(buf) == 0

    def test_empty_to_tensors_rejected(self):
        with pytest.raises(ValueError):
            RolloutBuffer(4).to_tensors(0.99, 0.95)

    def test_stream_order_is_key_order_not_insertion_order(self):
        def build(keys):
            buf = RolloutBuffer(4)
            rng = np.random.default_rng(9)
            payload = {
                k: (
                    rng.random((2, 4, 4)).astype(np.float32),
                    rng.random(3).astype(np.float32),
                    rng.random(6).astype(np.float32),
                    rng.random(6).astype(np.float32),
                )
                for k in sorted(keys)
            }
            for k in keys:
                g, sv, bc, bt = payload[k]
                buf.add(k, g, sv, bc, bt, 1, -1.0, 0.5, 1.0, True)
            return buf.to_tensors(0.99, 0.95)

        a = build([(0, 0), (0, 1), (1, 0), (1, 1)])
        b = build([(1, 1), (0, 0), (1, 0), (0, 1)])
        for k in a:
            assert torch.equal(a[k], b[k])

    def test_gae_applied_per_stream(self):
        buf = RolloutBuffer(6)
        for key, rewards in (((0, 0), [1.0, 0.0, 0.0]), ((0, 1), [0.0, 0.0, 1.0])):
            for t, r in enumerate(rewards):
                buf.add(
                    key,
                    np.zeros((2, 4, 4), np.float32),
                    np.zeros(3, np.float32),
                    np.zeros(6, np.float32),
                    np.zeros(6, np.float32),
                    0,
                    0.0,
                    0.0,
                    r,
                    t == 2,
                )
        data = buf.to_tensors(1.0, 1.0)
        adv = data["advantage"].numpy()
        # streams sorted by key: first stream [1,0,0] then [0,0,1]
        assert np.allclose(adv[:3], [1.0, 0.0, 0.0])
        assert np.allclose(adv[3:], [1.0, 1.0, 1.0])


class TestPPOTrainer:
    def make_trainer(self, **hyper_kw):
        defaults = dict(batch_size=4, buffer_size=8, epochs_per_update=2)
        defaults.update(hyper_kw)
        hp = Hyperparams(**defaults)
        net = build_network(OBS, NET, seed=0)
        return PPOTrainer(net, hp, total_steps=32, shuffle_seed=1)

    def test_update_changes_parameters_and_clears_buffer(self):
        trainer = self.make_trainer()
        before = [p.clone() for p in trainer.network.parameters()]
        buf = fill_buffer(RolloutBuffer(8))
        stats = trainer.update(buf)
        assert len(buf) == 0
        assert any(
            not torch.equal(a, b) for a, b in zip(before, trainer.network.parameters())
        )
        assert math.isfinite(stats.policy_loss)
        # fresh network's policy is near uniform
        assert abs(stats.entropy - math.log(6)) < 0.02

    def test_learning_rate_decays_linearly(self):
        trainer = self.make_trainer()
        lr0 = trainer.hyper.learning_rate
        assert trainer.current_lr() == lr0
        trainer.update(fill_buffer(RolloutBuffer(8)))
        assert trainer.current_lr() == pytest.approx(lr0 * (1 - 8 / 32))
        trainer.update(fill_buffer(RolloutBuffer(8)))
        assert trainer.current_lr() == pytest.approx(lr0 * (1 - 16 / 32))

    def test_constant_schedule_holds_rate(self):
        trainer = self.make_trainer(lr_schedule="constant")
        lr0 = trainer.hyper.learning_rate
        trainer.update(fill_buffer(RolloutBuffer(8)))
        trainer.update(fill_buffer(RolloutBuffer(8)))
        assert trainer.current_lr() == lr0

    def test_invalid_hyperparams_rejected_at_construction(self):
        with pytest.raises(ValueError):
            self.make_trainer(buffer_size=7)
        with pytest.raises(ValueError):
            self.make_trainer(lr_schedule="cosine")

    def test_non_finite_reward_aborts(self):
        trainer = self.make_trainer()
        buf = fill_buffer(RolloutBuffer(8), reward_override=float("inf"))
        with pytest.raises(NumericsError):
            trainer.update(buf)

    def test_update_count_tracks_transitions(self):
        trainer = self.make_trainer()
        trainer.update(fill_buffer(RolloutBuffer(8)))
        assert trainer.steps_done == 8


class TestLossTerms:
    def test_policy_loss_at_unit_ratio_is_negative_mean_advantage(self):
        net = build_network(OBS, NET, seed=3)
        g = torch.Generator().manual_seed(4)
        n = 10
        batch = (
            torch.rand((n, 2, 4, 4), generator=g),
            torch.rand((n, 3), generator=g),
            torch.rand((n, 6), generator=g),
            torch.rand((n, 6), generator=g),
        )
        actions = torch.randint(0, 6, (n,), generator=g)
        with torch.no_grad():
            logits, _ = net(*batch)
            old_lp = torch.log_softmax(logits, -1).gather(1, actions.unsqueeze(1)).squeeze(1)
        adv = torch.randn(n, generator=g)
        targets = torch.randn(n, generator=g)
        pl, vl, ent = ppo_loss_terms(net, *batch, actions, old_lp, adv, targets, 0.2)
        assert pl.item() == pytest.approx(-adv.mean().item(), abs=1e-6)
        assert vl.item() >= 0.0
        assert 0.0 <= ent.item() <= math.log(6) + 1e-6

    def test_gradients_match_finite_differences(self):
        # double precision end to end; ratios held away from the clip kink
        torch.manual_seed(0)
        obs = ObsSpec(grid_channels=1, grid_width=3, grid_height=3, state_dim=2, behavior_dim=2)
        net = build_network(obs, NetworkSpec(conv_layers=((2, 3, 1),), hidden_sizes=(4,)), seed=5)
        net = net.double()
        g = torch.Generator().manual_seed(6)
        n = 6
        batch = (
            torch.rand((n, 1, 3, 3), generator=g, dtype=torch.float64),
            torch.rand((n, 2), generator=g, dtype=torch.float64),
            torch.rand((n, 2), generator=g, dtype=torch.float64),
            torch.rand((n, 2), generator=g, dtype=torch.float64),
        )
        actions = torch.randint(0, 6, (n,), generator=g)
        with torch.no_grad():
            logits, _ = net(*batch)
            old_lp = torch.log_softmax(logits, -1).gather(1, actions.unsqueeze(1)).squeeze(1)
        old_lp = old_lp - 0.05  # ratio ~ e^0.05, inside the clip band
        adv = torch.randn(n, generator=g, dtype=torch.float64)
        targets = torch.randn(n, generator=g, dtype=torch.float64)

        def total_loss():
            pl, vl, ent = ppo_loss_terms(net, *batch, actions, old_lp, adv, targets, 0.2)
            return pl + 0.5 * vl - 0.005 * ent

        net.zero_grad()
        total_loss().backward()
        analytic = torch.cat([p.grad.flatten() for p in net.parameters()])

        params = [p for p in net.parameters()]
        fd = []
        h = 1e-6
        with torch.no_grad():
            for p in params:
                flat = p.view(-1)
                for i in range(flat.numel()):
                    orig = flat[i].item()
                    flat[i] = orig + h
                    up = total_loss().item()
                    flat[i] = orig - h
                    down = total_loss().item()
                    flat[i] = orig
                    fd.append((up - down) / (2 * h))
        fd = torch.tensor(fd, dtype=torch.float64)
        denom = torch.maximum(analytic.abs(), torch.full_like(analytic, 1e-6))
        rel = ((analytic - fd).abs() / denom).max().item()
        assert rel <= 1e-3
