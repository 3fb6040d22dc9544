import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fishguide.geometry import ViewportPoint
from fishguide.kinematics import InvalidTimeError, LagParams, euler_step, lag_step

unit = st.floats(0.0, 1.0)


def test_closed_form_value():
    p = lag_step(ViewportPoint(0, 0), ViewportPoint(1, 0), LagParams(1.0), 1.0)
    assert p.x == pytest.approx(0.6321205588285577, abs=1e-12)  # 1 - e^-1


def test_zero_dt_and_fixed_point():
    params = LagParams(3.0)
    p = ViewportPoint(0.3, 0.8)
    assert lag_step(p, ViewportPoint(0.9, 0.1), params, 0.0) == p
    assert lag_step(p, p, params, 12.5) == p


def test_negative_dt_rejected():
    with pytest.raises(InvalidTimeError):
        lag_step(ViewportPoint(0, 0), ViewportPoint(1, 1), LagParams(1.0), -0.1)


def test_params_validated():
    with pytest.raises(ValueError):
        LagParams(0.0)
    with pytest.raises(ValueError):
        LagParams(math.inf)


@pytest.mark.invariant
@given(unit, unit, unit, unit, st.floats(0.0, 5.0), st.floats(0.0, 5.0), st.floats(0.05, 10.0))
def test_semigroup(px, py, tx, ty, dt1, dt2, inv_tau):
    p, t, params = ViewportPoint(px, py), ViewportPoint(tx, ty), LagParams(inv_tau)
    two = lag_step(lag_step(p, t, params, dt1), t, params, dt2)
    one = lag_step(p, t, params, dt1 + dt2)
    assert two.x == pytest.approx(one.x, abs=1e-12)
    assert two.y == pytest.approx(one.y, abs=1e-12)


@pytest.mark.invariant
@given(unit, unit, unit, unit, st.floats(0.0, 5.0), st.floats(0.05, 10.0))
def test_monotone_approach(px, py, tx, ty, dt, inv_tau):
    p, t = ViewportPoint(px, py), ViewportPoint(tx, ty)
    q = lag_step(p, t, LagParams(inv_tau), dt)
    for a, b, c in ((p.x, q.x, t.x), (p.y, q.y, t.y)):
        assert abs(b - c) <= abs(a - c)
        if dt > 1e-6 and abs(a - c) > 1e-9:
            assert abs(b - c) < abs(a - c)


@pytest.mark.invariant
def test_euler_local_error_is_second_order():
    p, t, params = ViewportPoint(0.1, 0.9), ViewportPoint(0.8, 0.2), LagParams(2.0)
    errors = []
    for k in range(6):
        dt = 0.1 / 2**k
        exact = lag_step(p, t, params, dt)
        approx = euler_step(p, t, params, dt)
        errors.append(abs(exact.x - approx.x))
    ratios = [errors[i] / errors[i + 1] for i in range(len(errors) - 1)]
    for r in ratios:
        assert r == pytest.approx(4.0, rel=0.1)
