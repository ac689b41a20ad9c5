"""Distance-reduction reward: identity, telescoping, and bounds."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stylebots.arena import AgentEvents, EnvConfig
from stylebots.behavior import BehaviorVector, TargetVector
from stylebots.rewards import RewardParams, alignment_reward, score_reward

unit_floats = st.floats(0.0, 1.0, allow_nan=False, width=64)


def vec(draw_list):
    return BehaviorVector(*draw_list)


@st.composite
def behavior_vectors(draw):
    return vec([draw(unit_floats) for _ in range(6)])


@st.composite
def targets(draw):
    b1 = draw(unit_floats)
    b2 = draw(unit_floats) * (1.0 - b1)
    b3 = 1.0 - (b1 + b2)
    rest = [draw(st.floats(0.15, 1.0, allow_nan=False)) for _ in range(3)]
    return TargetVector(b1, b2, b3, rest[0], rest[1], rest[2])


class TestAlignmentReward:
    def test_single_step_identity(self):
        prev = BehaviorVector.zero()
        curr = BehaviorVector(0.5, 0.5, 0.0, 0.0, 0.0, 0.0)
        target = TargetVector(0.5, 0.5, 0.0, 0.0, 0.5, 0.5)
        t = target.as_array()
        expected = (
            np.linalg.norm(prev.as_array() - t) - np.linalg.norm(curr.as_array() - t)
        ) / np.linalg.norm(t)
        assert alignment_reward(prev, curr, target) == pytest.approx(expected, abs=1e-15)

    def test_moving_toward_target_pays_positive(self):
        target = TargetVector(1.0, 0.0, 0.0, 0.5, 0.5, 0.5)
        prev = BehaviorVector.zero()
        curr = BehaviorVector(0.5, 0.0, 0.0, 0.25, 0.25, 0.25)
        assert alignment_reward(prev, curr, target) > 0

    def test_moving_away_pays_negative(self):
        target = TargetVector(1.0, 0.0, 0.0, 0.0, 0.5, 0.5)
        prev = BehaviorVector(0.5, 0.0, 0.0, 0.0, 0.25, 0.25)
        curr = BehaviorVector.zero()
        assert alignment_reward(prev, curr, target) < 0

    def test_no_movement_pays_zero(self):
        target = TargetVector(1.0, 0.0, 0.0, 0.5, 0.5, 0.5)
        b = BehaviorVector(0.3, 0.1, 0.2, 0.4, 0.5, 0.6)
        assert alignment_reward(b, b, target) == 0.0

    def test_scale_multiplies(self):
        target = TargetVector(1.0, 0.0, 0.0, 0.5, 0.5, 0.5)
        prev, curr = BehaviorVector.zero(), BehaviorVector(0.5, 0.0, 0.0, 0.5, 0.5, 0.5)
        r1 = alignment_reward(prev, curr, target, RewardParams(scale=1.0))
        r3 = alignment_reward(prev, curr, target, RewardParams(scale=3.0))
        assert r3 == pytest.approx(3.0 * r1, rel=1e-12)

    def test_zero_norm_target_rejected(self):
        z = TargetVector(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            alignment_reward(BehaviorVector.zero(), BehaviorVector.zero(), z)

    def test_reward_params_validation(self):
        assert RewardParams(1.0).validate() == []
        assert RewardParams(0.0).validate()
        assert RewardParams(float("inf")).validate()


class TestTelescoping:
    @settings(max_examples=200, deadline=None)
    @given(
        target=targets(),
        trajectory=st.lists(behavior_vectors(), min_size=1, max_size=30),
        scale=st.floats(0.1, 10.0),
    )
    def test_return_telescopes_to_endpoint_distances(self, target, trajectory, scale):
        params = RewardParams(scale=scale)
        t = target.as_array()
        prev = BehaviorVector.zero()
        total = 0.0
        for curr in trajectory:
            total += alignment_reward(prev, curr, target, params)
            prev = curr
        norm_t = np.linalg.norm(t)
        expected = (
            scale
            * (np.linalg.norm(BehaviorVector.zero().as_array() - t) - np.linalg.norm(prev.as_array() - t))
            / norm_t
        )
        assert abs(total - expected) <= 1e-6 * scale

    @settings(max_examples=200, deadline=None)
    @given(
        target=targets(),
        trajectory=st.lists(behavior_vectors(), min_size=1, max_size=30),
    )
    def test_return_never_exceeds_scale_from_zero_start(self, target, trajectory):
        # starting at the zero vector, the best possible return is the scale
        params = RewardParams(scale=1.0)
        prev = BehaviorVector.zero()
        total = 0.0
        for curr in trajectory:
            total += alignment_reward(prev, curr, target, params)
            prev = curr
        assert total <= params.scale + 1e-9

    @settings(max_examples=100, deadline=None)
    @given(target=targets(), mid=st.lists(behavior_vectors(), min_size=0, max_size=10))
    def test_exact_match_from_zero_earns_exactly_scale(self, target, mid):
        # hitting the target at the end pays the full scale, regardless of
        # the path taken in between
        params = RewardParams(scale=1.0)
        prev = BehaviorVector.zero()
        total = 0.0
        for curr in mid + [BehaviorVector.from_array(target.as_array())]:
            total += alignment_reward(prev, curr, target, params)
            prev = curr
        assert abs(total - params.scale) <= 1e-9


class TestScoreReward:
    def test_score_reward_arithmetic(self):
        cfg = EnvConfig(score_ceiling=100)
        ev = AgentEvents(coins_collected=2, diamonds_collected=5, kills=1)
        assert score_reward(ev, cfg) == pytest.approx((2 + 5 + 10) / 100)

    def test_no_events_no_reward(self):
        assert score_reward(AgentEvents(), EnvConfig()) == 0.0
