import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fishguide.fishsim import (
    BehaviorParams,
    SchoolState,
    advance_school,
    choose_real_target,
    sample_segment_duration,
    trial_rng,
)
from fishguide.geometry import ViewportPoint


def test_segment_duration_range_and_grid(rng):
    params = BehaviorParams(dt_max=3.0)
    for _ in range(2000):
        d = sample_segment_duration(rng, params)
        assert 0 < d <= 3.0 + 1e-12
        assert math.isclose(d * 10, round(d * 10), abs_tol=1e-9)


def test_segment_duration_single_bucket(rng):
    params = BehaviorParams(dt_max=0.1)
    assert all(sample_segment_duration(rng, params) == pytest.approx(0.1) for _ in range(200))


def test_segment_duration_mean(rng):
    params = BehaviorParams(dt_max=3.0)
    draws = [sample_segment_duration(rng, params) for _ in range(100_000)]
    # discrete uniform over {0.1, ..., 3.0} has mean (0.1 + 3.0) / 2
    assert np.mean(draws) == pytest.approx(1.55, abs=0.02)


def test_params_validated():
    with pytest.raises(ValueError):
        BehaviorParams(p_ignore=1.5)
    with pytest.raises(ValueError):
        BehaviorParams(theta=0.0)


def test_reaction_when_never_ignoring(rng):
    params = BehaviorParams(p_ignore=0.0, theta=0.3)
    pos, virtual = ViewportPoint(0.4, 0.5), ViewportPoint(0.6, 0.5)
    for _ in range(500):
        assert choose_real_target(pos, virtual, params, rng) == virtual


def test_ignore_always_stays_in_box(rng):
    params = BehaviorParams(p_ignore=1.0)
    for pos in (ViewportPoint(0.5, 0.5), ViewportPoint(0.05, 0.95)):
        virtual = ViewportPoint(pos.x, pos.y)
        for _ in range(1000):
            t = choose_real_target(pos, virtual, params, rng)
            assert abs(t.x - pos.x) <= 0.2 + 1e-12 and abs(t.y - pos.y) <= 0.2 + 1e-12
            assert 0 <= t.x <= 1 and 0 <= t.y <= 1


def test_out_of_range_never_reacts(rng):
    params = BehaviorParams(p_ignore=0.0, theta=0.3)
    pos, virtual = ViewportPoint(0.2, 0.5), ViewportPoint(0.7, 0.5)
    for _ in range(10_000):
        assert choose_real_target(pos, virtual, params, rng) is not virtual


def test_zero_duration_is_identity(rng):
    s = SchoolState.at(0.3, 0.4)
    assert advance_school(s, lambda k: ViewportPoint(0.9, 0.5), BehaviorParams(), rng, 0.0) == s


def test_convergence_to_static_stimulus(rng):
    params = BehaviorParams(p_ignore=0.0, theta=1.5, inv_tau_real=1.0)
    s = advance_school(SchoolState.at(0.5, 0.5), lambda k: ViewportPoint(0.9, 0.5), params, rng, 30.0)
    # every retarget picks the stimulus, so x(t) = 0.9 - 0.4 exp(-t)
    assert s.pos.x > 0.85
    assert s.pos.x == pytest.approx(0.9 - 0.4 * math.exp(-30.0), abs=1e-9)


def test_deterministic_given_seed():
    params = BehaviorParams(p_ignore=0.5)
    virtual = lambda k: ViewportPoint(0.6 + 0.01 * k, 0.4)
    a = advance_school(SchoolState.at(), virtual, params, trial_rng(3, 1), 25.0)
    b = advance_school(SchoolState.at(), virtual, params, trial_rng(3, 1), 25.0)
    assert a == b


def test_duration_must_be_on_grid(rng):
    with pytest.raises(ValueError):
        advance_school(SchoolState.at(), lambda k: None, BehaviorParams(), rng, 0.25)


@pytest.mark.invariant
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_positions_stay_in_viewport(seed, p, x0, y0):
    params = BehaviorParams(p_ignore=p, dx_max=0.5, dy_max=0.5)
    rng = np.random.default_rng(seed)
    s = SchoolState.at(x0, y0)
    for _ in range(100):
        s = advance_school(s, lambda k: ViewportPoint(1.0, 0.0), params, rng, 0.1)
        assert 0 <= s.pos.x <= 1 and 0 <= s.pos.y <= 1
        assert 0 <= s.segment_remaining <= params.dt_max + 1e-9


@pytest.mark.invariant
def test_full_ignore_is_independent_of_stimulus():
    params = BehaviorParams(p_ignore=1.0)
    a = advance_school(SchoolState.at(), lambda k: ViewportPoint(0.55, 0.5), params, trial_rng(9), 60.0)
    b = advance_school(SchoolState.at(), lambda k: ViewportPoint(0.1 * (k % 10), 0.9), params, trial_rng(9), 60.0)
    c = advance_school(SchoolState.at(), lambda k: None, params, trial_rng(9), 60.0)
    assert a == b == c


@pytest.mark.invariant
@pytest.mark.parametrize("p", [0.0, 0.3, 0.6, 0.9])
def test_reaction_frequency(p):
    rng = np.random.default_rng(77)
    params = BehaviorParams(p_ignore=p)
    pos, virtual = ViewportPoint(0.5, 0.5), ViewportPoint(0.6, 0.55)
    n = 100_000
    reacted = sum(choose_real_target(pos, virtual, params, rng) is virtual for _ in range(n))
    sigma = math.sqrt(p * (1 - p) / n)
    assert abs(reacted / n - (1 - p)) <= 3 * sigma + 1e-12
