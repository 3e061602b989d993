"""Unit tests for front tracking, speed measurement, and tail fitting."""

import numpy as np
import pytest

from invasionlab.core import Grid, Params, State
from invasionlab.front import FrontNotFound, FrontProfile, InsufficientData, \
    fit_tail_decay, front_position, front_positions, measure_speed


@pytest.fixture
def params():
    return Params(0.1, 2.0, 0.01)


def _tanh_state(grid, x0, t=0.0):
    u = 0.45 * (1.0 - np.tanh(grid.x - x0)) / 1.0
    return State(grid, t, u, np.zeros(grid.n))


def test_front_position_on_tanh():
    grid = Grid(-50.0, 50.0, 2001)
    st = _tanh_state(grid, 7.3)
    # level 0.45 sits exactly at the tanh midpoint x0
    assert abs(front_position(st, 0.45) - 7.3) < 1e-3


def test_front_position_picks_rightmost_crossing():
    grid = Grid(-50.0, 50.0, 4001)
    u = 0.45 * (1.0 - np.tanh(grid.x - 10.0)) \
        + 0.5 * np.exp(-(grid.x + 20.0) ** 2)
    st = State(grid, 0.0, u, np.zeros(grid.n))
    assert abs(front_position(st, 0.45) - 10.0) < 1e-2


def test_front_position_raises_when_flat():
    grid = Grid(-5.0, 5.0, 101)
    st = State(grid, 0.0, np.zeros(grid.n), np.zeros(grid.n))
    with pytest.raises(FrontNotFound):
        front_position(st, 0.45)


def test_front_positions_skips_frontless_snapshots():
    grid = Grid(-50.0, 50.0, 1001)

    class T:
        snapshots = [State(grid, 0.0, np.zeros(grid.n), np.zeros(grid.n)),
                     _tanh_state(grid, 0.0, t=1.0),
                     _tanh_state(grid, 2.0, t=2.0)]

    ts, pos = front_positions(T(), 0.45)
    assert list(ts) == [1.0, 2.0]
    assert np.allclose(pos, [0.0, 2.0], atol=1e-2)


def test_measure_speed_exact_on_linear_data():
    t = np.linspace(0.0, 100.0, 51)
    c, stderr = measure_speed(t, 0.7 * t - 3.0)
    assert abs(c - 0.7) < 1e-12
    assert stderr < 1e-12


def test_measure_speed_uses_trailing_window_only():
    t = np.linspace(0.0, 100.0, 101)
    # transient for t < 50, then clean linear motion
    pos = np.where(t < 50.0, 0.1 * t, 0.7 * t - 30.0)
    c, _ = measure_speed(t, pos, trailing_fraction=0.4)
    assert abs(c - 0.7) < 1e-10


def test_measure_speed_requires_enough_samples():
    with pytest.raises(InsufficientData):
        measure_speed(np.arange(5.0), np.arange(5.0))


def test_fit_tail_decay_on_synthetic_exponential():
    grid = Grid(-20.0, 200.0, 4401)
    eta = 0.37
    u = np.minimum(0.9, np.exp(-eta * grid.x))
    fp = FrontProfile(grid=grid, u_ps=u, w_ps=np.zeros(grid.n), c_ps=0.7)
    eta_fit, r2 = fit_tail_decay(fp)
    assert abs(eta_fit - eta) < 1e-6
    assert r2 > 0.999999
    assert fp.eta_ps == eta_fit


def test_fit_tail_decay_insufficient_span():
    grid = Grid(-20.0, 30.0, 1001)
    # tail truncated well above the lower fit threshold: < 3 decades usable
    u = np.maximum(np.exp(-0.4 * grid.x), 5e-4)
    u = np.minimum(u, 0.9)
    fp = FrontProfile(grid=grid, u_ps=u, w_ps=np.zeros(grid.n), c_ps=0.7)
    with pytest.raises(InsufficientData):
        fit_tail_decay(fp)


def test_sample_on_extends_by_zero_on_the_right():
    grid = Grid(-10.0, 10.0, 201)
    fp = FrontProfile(grid=grid, u_ps=np.ones(grid.n),
                      w_ps=np.ones(grid.n), c_ps=0.7)
    big = Grid(-10.0, 30.0, 401)
    u, w = fp.sample_on(big)
    assert u[-1] == 0.0 and w[-1] == 0.0
    assert u[0] == 1.0
