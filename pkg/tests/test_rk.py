import math

import numpy as np
import pytest

from imcf_lab import rk


def _osc(y):
    return (y[1], -y[0])


def test_dopri_harmonic_oscillator_global_error():
    res = rk.dopri(_osc, 0.0, (1.0, 0.0), 10.0, tol=1e-11, h0=1e-2, h_min=1e-14, h_max=0.5)
    assert res.status == "end"
    assert res.s[-1] == pytest.approx(10.0, abs=1e-14)
    assert abs(res.y[-1, 0] - math.cos(10.0)) < 1e-8
    assert abs(res.y[-1, 1] + math.sin(10.0)) < 1e-8
    assert res.max_error <= 1e-11


def test_dense_output_between_steps():
    res = rk.dopri(_osc, 0.0, (1.0, 0.0), 5.0, tol=1e-11, h0=1e-2, h_min=1e-14, h_max=0.5)
    s = np.linspace(0.1, 4.9, 57)
    y = res.dense(s)
    assert np.max(np.abs(y[:, 0] - np.cos(s))) < 1e-8


def test_backward_integration():
    res = rk.dopri(lambda y: (y[0],), 0.0, (1.0,), -2.0, tol=1e-12, h0=1e-2, h_min=1e-14, h_max=0.5)
    assert res.y[-1, 0] == pytest.approx(math.exp(-2.0), rel=1e-10)
    assert res.dense(np.array([-1.0]))[0, 0] == pytest.approx(math.exp(-1.0), rel=1e-9)


def test_event_located_to_arclength_tolerance():
    ev = rk.Event("zero", lambda y: y[0], -1)
    res = rk.dopri(_osc, 0.0, (1.0, 0.0), 10.0, tol=1e-12, h0=1e-2, h_min=1e-14, h_max=0.5, events=[ev])
    assert res.status == "event" and res.event == "zero"
    assert abs(res.s[-1] - math.pi / 2) < 1e-10
    assert abs(res.y[-1, 0]) < 1e-10


def test_event_direction_filter():
    up = rk.Event("up", lambda y: y[0], +1)
    res = rk.dopri(_osc, 0.0, (1.0, 0.0), 10.0, tol=1e-12, h0=1e-2, h_min=1e-14, h_max=0.5, events=[up])
    assert abs(res.s[-1] - 3 * math.pi / 2) < 1e-10


def test_step_underflow_on_blow_up():
    res = rk.dopri(lambda y: (y[0] ** 2,), 0.0, (1.0,), 2.0, tol=1e-10, h0=1e-2, h_min=1e-12, h_max=0.5)
    assert res.status in ("underflow", "failure")
    assert res.s[-1] < 1.0


def test_step_budget():
    res = rk.dopri(_osc, 0.0, (1.0, 0.0), 100.0, tol=1e-10, h0=1e-3, h_min=1e-14, h_max=1e-3, max_steps=50)
    assert res.status == "max_steps"
