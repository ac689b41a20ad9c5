"""Training loop: artifacts, determinism, seeding scheme."""

import csv
import json
import math

import numpy as np
import pytest
import torch

from stylebots.arena import EnvConfig
from stylebots.checkpoint import load_network
from stylebots.config import RunConfig
from stylebots.networks import NetworkSpec
from stylebots.ppo import Hyperparams
from stylebots.training import episode_seed, train

TINY_ENV = EnvConfig(
    grid_width=8, grid_height=8, episode_length=16, max_coins=3, max_diamonds=1,
    npc_count=1, score_ceiling=20,
)


def tiny_run_config(**kw):
    defaults = dict(
        mode="behavior",
        seed=0,
        n_envs=2,
        total_steps=512,
        checkpoint_interval=256,
        env=TINY_ENV,
        hyper=Hyperparams(batch_size=64, buffer_size=256),
        network=NetworkSpec(conv_layers=((4, 3, 1),), hidden_sizes=(16,)),
    )
    defaults.update(kw)
    return RunConfig(**defaults)


def read_curves(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


class TestTrainArtifacts:
    def test_run_completes_with_artifacts(self, tmp_path):
        result = train(tiny_run_config(), tmp_path)
        assert result.status == "complete"
        assert result.steps_done == 512
        assert result.final_checkpoint.exists()
        assert (tmp_path / "checkpoints" / "step_0000000000.pt").exists()
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["status"] == "complete"
        assert manifest["steps_done"] == 512
        rows = read_curves(result.curves_path)
        assert len(rows) == 2  # 512 transitions / 256 buffer
        assert [r["step"] for r in rows] == ["256", "512"]

    def test_zero_steps_trains_nothing_but_checkpoints(self, tmp_path):
        result = train(tiny_run_config(total_steps=0), tmp_path)
        assert result.status == "complete"
        assert result.updates == 0
        assert result.final_checkpoint.exists()
        assert read_curves(result.curves_path) == []

    def test_checkpoint_interval_honored(self, tmp_path):
        train(tiny_run_config(total_steps=512, checkpoint_interval=256), tmp_path)
        names = sorted(p.name for p in (tmp_path / "checkpoints").iterdir())
        assert "step_0000000256.pt" in names
        assert "step_0000000512.pt" in names

    def test_first_update_entropy_near_uniform(self, tmp_path):
        result = train(tiny_run_config(), tmp_path)
        rows = read_curves(result.curves_path)
        assert abs(float(rows[0]["entropy"]) - math.log(6)) < 0.05

    def test_behavior_error_column_populated_in_behavior_mode(self, tmp_path):
        result = train(tiny_run_config(), tmp_path)
        rows = read_curves(result.curves_path)
        errs = [float(r["mean_behavior_error"]) for r in rows if r["mean_behavior_error"]]
        assert errs and all(0.0 <= e <= 1.0 for e in errs)

    def test_winonly_mode_leaves_error_column_empty(self, tmp_path):
        result = train(tiny_run_config(mode="winonly"), tmp_path)
        rows = read_curves(result.curves_path)
        assert all(r["mean_behavior_error"] == "" for r in rows)

    def test_final_checkpoint_restores(self, tmp_path):
        result = train(tiny_run_config(), tmp_path)
        net, payload = load_network(result.final_checkpoint)
        assert payload["train_step"] == 512
        assert payload["mode"] == "behavior"
        assert payload["hyper"]["buffer_size"] == 256


class TestTrainDeterminism:
    def test_identical_runs_identical_artifacts(self, tmp_path):
        cfg = tiny_run_config()
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        res_a = train(cfg, out_a)
        res_b = train(cfg, out_b)
        assert res_a.curves_path.read_bytes() == res_b.curves_path.read_bytes()
        net_a, _ = load_network(res_a.final_checkpoint)
        net_b, _ = load_network(res_b.final_checkpoint)
        for pa, pb in zip(net_a.parameters(), net_b.parameters()):
            assert torch.equal(pa, pb)

    def test_different_seed_different_curves(self, tmp_path):
        res_a = train(tiny_run_config(seed=0), tmp_path / "a")
        res_b = train(tiny_run_config(seed=1), tmp_path / "b")
        assert res_a.curves_path.read_bytes() != res_b.curves_path.read_bytes()


class TestEpisodeSeeds:
    def test_deterministic(self):
        assert episode_seed(7, 2, 9) == episode_seed(7, 2, 9)

    def test_distinct_across_envs_and_episodes(self):
        seeds = {episode_seed(0, e, i) for e in range(8) for i in range(64)}
        assert len(seeds) == 8 * 64

    def test_master_seed_matters(self):
        assert episode_seed(0, 0, 0) != episode_seed(1, 0, 0)
