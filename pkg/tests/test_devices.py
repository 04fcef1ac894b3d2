"""Device model tests.

Full-transition expectations are frozen from an independent fine-step
reference integrator defined here (not the code path under test).
"""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memtlg import (
    InverterParams,
    MemristorParams,
    MemristorState,
    SwitchParams,
    WindowKind,
    calibrate_rate_k,
    inverter_eval,
    memristor_resistance,
    memristor_step,
    switch_pass,
)
from memtlg.errors import InvalidInputError


def reference_integrate(x0, v, t_end, params, n_steps=200_000):
    """Independent reference: plain Euler at a much finer step."""
    x = x0
    dt = t_end / n_steps
    for _ in range(n_steps):
        if abs(v) > params.v_write_threshold:
            sign = 1.0 if v > 0 else -1.0
            x += sign * params.rate_k * (abs(v) - params.v_write_threshold) * dt
            x = min(1.0, max(0.0, x))
    return x


# --- memristor_resistance ---------------------------------------------------


def test_resistance_endpoints(device_params):
    assert memristor_resistance(MemristorState(1.0), device_params) == 3000.0
    assert memristor_resistance(MemristorState(0.0), device_params) == 60000.0


def test_resistance_midpoint(device_params):
    assert memristor_resistance(MemristorState(0.5), device_params) == pytest.approx(31500.0)


# --- memristor_step ----------------------------------------------------------


def test_step_below_threshold_is_identity(device_params):
    s = MemristorState(0.3)
    out = memristor_step(s, 1.0, 1e-6, device_params)
    assert out is s  # bit-exact, same object


def test_full_set_in_10us_matches_reference(device_params):
    # reference integrator fixes the expectation: full SET at +2.0 V
    expect = reference_integrate(0.0, 2.0, 10e-6, device_params)
    assert expect == 1.0
    s = MemristorState(0.0)
    dt = 1e-8
    for _ in range(1000):
        s = memristor_step(s, 2.0, dt, device_params)
    assert s.x == 1.0


def test_full_reset_in_10us_matches_reference(device_params):
    expect = reference_integrate(1.0, -2.0, 10e-6, device_params)
    assert expect == 0.0
    s = MemristorState(1.0)
    dt = 1e-8
    for _ in range(1000):
        s = memristor_step(s, -2.0, dt, device_params)
    assert s.x == 0.0


def test_partial_transition_matches_reference(device_params):
    # no clamping involved: Euler at constant v is exact per step count
    expect = reference_integrate(0.0, 2.0, 4e-6, device_params)
    s = MemristorState(0.0)
    for _ in range(400):
        s = memristor_step(s, 2.0, 1e-8, device_params)
    assert s.x == pytest.approx(expect, abs=1e-9)
    assert 0.0 < s.x < 1.0


def test_step_rejects_nonfinite(device_params):
    with pytest.raises(InvalidInputError):
        memristor_step(MemristorState(0.5), float("nan"), 1e-8, device_params)
    with pytest.raises(InvalidInputError):
        memristor_step(MemristorState(0.5), 2.0, float("inf"), device_params)
    with pytest.raises(InvalidInputError):
        memristor_step(MemristorState(0.5), 2.0, -1e-8, device_params)


def test_parabolic_window_slows_near_rail():
    p = MemristorParams(window_kind=WindowKind.PARABOLIC)
    near = memristor_step(MemristorState(0.9), 2.0, 1e-8, p).x - 0.9
    far = memristor_step(MemristorState(0.1), 2.0, 1e-8, p).x - 0.1
    assert 0.0 < near < far


@given(
    x=st.floats(0.0, 1.0),
    v=st.floats(-3.0, 3.0, allow_nan=False),
    dt=st.floats(1e-10, 1e-5),
)
def test_state_always_clamped(x, v, dt):
    out = memristor_step(MemristorState(x), v, dt, MemristorParams())
    assert 0.0 <= out.x <= 1.0


@given(x=st.floats(0.0, 1.0), v=st.floats(-1.2, 1.2), n=st.integers(1, 50))
def test_read_never_disturbs(x, v, n):
    params = MemristorParams()
    s0 = MemristorState(x)
    s = s0
    for _ in range(n):
        s = memristor_step(s, v, 1e-6, params)
    assert s is s0


@settings(max_examples=50)
@given(
    x=st.floats(0.0, 1.0),
    v=st.floats(1.3, 3.0),
    n=st.integers(1, 30),
    kind=st.sampled_from(list(WindowKind)),
)
def test_monotone_switching(x, v, n, kind):
    p = MemristorParams(window_kind=kind)
    s = MemristorState(x)
    prev = s.x
    for _ in range(n):
        s = memristor_step(s, v, 1e-7, p)
        assert s.x >= prev
        prev = s.x
    s = MemristorState(x)
    prev = s.x
    for _ in range(n):
        s = memristor_step(s, -v, 1e-7, p)
        assert s.x <= prev
        prev = s.x


@given(x=st.floats(0.0, 1.0))
def test_resistance_bounds(x):
    params = MemristorParams()
    r = memristor_resistance(MemristorState(x), params)
    assert params.r_on <= r <= params.r_off


# --- switch_pass -------------------------------------------------------------


def test_switch_clamps_high_level():
    p = SwitchParams(v_tn=0.4)
    v_eff, r = switch_pass(1.0, 1.0, p)
    assert v_eff == pytest.approx(0.6)
    assert r == p.r_on_series


def test_switch_passes_low_level_undegraded():
    p = SwitchParams(v_tn=0.4)
    v_eff, r = switch_pass(0.3, 1.0, p)
    assert v_eff == 0.3
    assert r == p.r_on_series


def test_switch_off_isolates():
    p = SwitchParams()
    v_eff, r = switch_pass(1.0, 0.0, p)
    assert r == p.r_off_series
    assert v_eff == 1.0


def test_switch_passes_negative_when_on():
    p = SwitchParams(v_tn=0.4)
    v_eff, r = switch_pass(-2.5, 2.5, p)
    assert v_eff == -2.5
    assert r == p.r_on_series


# --- inverter_eval -----------------------------------------------------------


def test_inverter_below_threshold():
    assert inverter_eval(0.2, InverterParams(0.4, 1.0)) == 1.0


def test_inverter_above_threshold():
    assert inverter_eval(0.41, InverterParams(0.4, 1.0)) == 0.0


def test_inverter_tie_breaks_low():
    assert inverter_eval(0.4, InverterParams(0.4, 1.0)) == 0.0


@given(v=st.floats(-1.0, 2.0, allow_nan=False))
def test_inverter_output_is_rail_exact(v):
    out = inverter_eval(v, InverterParams(0.37, 1.0))
    assert out in (0.0, 1.0)


# --- rate constant calibration ------------------------------------------------


def test_rate_k_bisection_matches_default(device_params):
    # closed form for the rectangular window: 1 / ((2.0 - 1.2) * 10us)
    k = calibrate_rate_k(device_params)
    assert k == pytest.approx(125_000.0, rel=1e-3)
    assert math.isclose(device_params.rate_k, 125_000.0)
