import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from light_marl.errors import ConfigurationError, InvalidInputError
from light_marl.intrinsic import MAX_DISTANCE, IntrinsicRecord, intrinsic_reward, shaped_team_reward


def test_identity_is_zero():
    p = np.array([0.2, 0.3, 0.5])
    assert intrinsic_reward(p, p) == 0.0


def test_disjoint_one_hots():
    assert intrinsic_reward([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]) == pytest.approx(-math.sqrt(2), abs=1e-15)


def test_half_half_vs_one_hot():
    assert intrinsic_reward([0.5, 0.5], [1.0, 0.0]) == pytest.approx(-math.sqrt(0.5), abs=1e-15)
    assert round(intrinsic_reward([0.5, 0.5], [1.0, 0.0]), 5) == -0.70711


def test_absent_preference():
    assert intrinsic_reward(None, [0.1, 0.9]) == 0.0


def test_vocabulary_mismatch():
    with pytest.raises(ConfigurationError):
        intrinsic_reward([0.5, 0.5], [1.0, 0.0, 0.0])


simplex = st.integers(2, 8).flatmap(
    lambda n: st.tuples(*[st.lists(st.floats(0, 1), min_size=n, max_size=n)] * 2))


def normalize(v):
    v = np.asarray(v) + 1e-3
    return v / v.sum()


@settings(max_examples=300, deadline=None)
@given(simplex)
def test_symmetric_bounded_nonpositive(pair):
    a, b = normalize(pair[0]), normalize(pair[1])
    r = intrinsic_reward(a, b)
    assert r == intrinsic_reward(b, a)
    assert -MAX_DISTANCE - 1e-12 <= r <= 0.0
    assert (r == 0.0) == np.array_equal(a, b)


def test_shaped_reward_arithmetic():
    assert shaped_team_reward(0.0, [-0.5, -0.3], 1.0) == pytest.approx(-0.4, abs=1e-15)
    assert shaped_team_reward(3.5, [-0.5, -0.3], 0.0) == 3.5
    assert shaped_team_reward(3.5, [0.0, 0.0, 0.0], 0.5) == 3.5


def test_shaped_reward_errors():
    with pytest.raises(InvalidInputError):
        shaped_team_reward(1.0, [], 0.5)
    with pytest.raises(InvalidInputError):
        shaped_team_reward(1.0, [0.0], -0.1)


@settings(max_examples=300, deadline=None)
@given(st.floats(-300, 300), st.lists(st.floats(-MAX_DISTANCE, 0), min_size=1, max_size=6),
       st.sampled_from([0.1, 0.5, 1.0]))
def test_shaping_only_subtracts(r_ex, intrinsics, lam):
    delta = shaped_team_reward(r_ex, intrinsics, lam) - r_ex
    assert -MAX_DISTANCE * lam - 1e-9 <= delta <= 1e-9


def test_record_as_dict():
    rec = IntrinsicRecord(agent=1, step=4, rule=None, preference=None, agent_dist=np.array([0.5, 0.5]),
                          reward=0.0)
    assert rec.as_dict() == {"agent": 1, "step": 4, "rule": None, "preference": None,
                             "agent_dist": [0.5, 0.5], "intrinsic": 0.0}
