"""Unit tests for wake diagnostics: wavenumbers, phases, defects, decay fits."""

import numpy as np
import pytest

from invasionlab.core import Grid, State
from invasionlab.diagnostics import DecayFit, InsufficientOscillations, \
    NoDefect, decay_fit, defect_speed, extract_phase, measure_wavenumber
from invasionlab.wavetrain import WaveTrain


def _sin_wavetrain(L, m=64):
    sigma = np.arange(m) / m
    return WaveTrain(m=m, profile_u=0.4 + 0.35 * np.sin(2 * np.pi * sigma),
                     profile_w=np.zeros(m), L=L, c=0.0)


def test_measure_wavenumber_synthetic():
    grid = Grid(-300.0, 0.0, 6001)
    k_true = 0.37
    u = 0.4 + 0.3 * np.sin(k_true * grid.x)
    st = State(grid, 0.0, u, np.zeros(grid.n))
    k, spread = measure_wavenumber(st, (-280.0, -5.0), return_spread=True)
    assert abs(k - k_true) / k_true < 1e-3
    assert spread < 1e-3


def test_measure_wavenumber_needs_oscillations():
    grid = Grid(-100.0, 0.0, 1001)
    st = State(grid, 0.0, np.zeros(grid.n), np.zeros(grid.n))
    with pytest.raises(InsufficientOscillations):
        measure_wavenumber(st, (-90.0, -5.0))


def test_extract_phase_recovers_uniform_shift():
    L = 17.0
    wt = _sin_wavetrain(L)
    grid = Grid(-300.0, 0.0, 6001)
    shift = 3.2
    u, w = wt.sample(grid.x + shift)
    st = State(grid, 0.0, u, w)
    centers, psi = extract_phase(st, wt, (-280.0, -10.0))
    # psi is defined modulo L and up to unwrap branch; compare mod L
    err = np.abs((psi - shift + L / 2) % L - L / 2)
    assert np.max(err) < 0.05


def test_extract_phase_tracks_slow_modulation():
    L = 17.0
    wt = _sin_wavetrain(L, m=128)
    grid = Grid(-400.0, 0.0, 8001)
    psi_true = 2.0 * np.tanh((grid.x + 200.0) / 60.0)
    u, w = wt.sample(grid.x + psi_true)
    st = State(grid, 0.0, u, w)
    centers, psi = extract_phase(st, wt, (-380.0, -10.0))
    ref = 2.0 * np.tanh((centers + 200.0) / 60.0)
    err = np.abs((psi - ref + L / 2) % L - L / 2)
    assert np.sqrt(np.mean(err ** 2)) < 0.1


def test_defect_speed_on_synthetic_erf_defect():
    L = 17.0
    c_true = -0.52
    centers = np.linspace(-350.0, -10.0, 200)
    times = np.linspace(20.0, 300.0, 30)
    centers_list, psi_list = [], []
    for t in times:
        psi = 1.5 * np.tanh((centers - c_true * t) / 8.0)
        centers_list.append(centers)
        psi_list.append(psi)
    c = defect_speed(times, centers_list, psi_list)
    # crossing positions are found on the discrete center lattice, so the
    # recovered speed carries an O(spacing / t_span) quantization error
    assert abs(c - c_true) / abs(c_true) < 0.02


def test_defect_speed_raises_without_defect():
    centers = np.linspace(-100.0, -10.0, 50)
    times = np.linspace(0.0, 100.0, 15)
    flat = [np.zeros_like(centers) for _ in times]
    with pytest.raises(NoDefect):
        defect_speed(times, [centers] * len(times), flat)


def test_decay_fit_exact_algebraic():
    t = np.linspace(0.0, 400.0, 300)
    vals = 2.7 * (1.0 + t) ** (-0.5)
    fit = decay_fit(t, vals, "algebraic")
    assert abs(fit.exponent_or_rate + 0.5) < 1e-10
    assert fit.r2 > 0.999999
    assert fit.kind == "algebraic"


def test_decay_fit_exact_exponential():
    t = np.linspace(0.0, 200.0, 150)
    vals = 0.3 * np.exp(-0.044 * t)
    fit = decay_fit(t, vals, "exponential")
    assert abs(fit.exponent_or_rate + 0.044) < 1e-10
    assert fit.r2 > 0.999999


def test_decay_fit_filters_nonpositive_values():
    t = np.linspace(0.0, 100.0, 60)
    vals = np.exp(-0.1 * t)
    vals[::7] = -1.0  # corrupted samples must be ignored, not crash the log
    fit = decay_fit(t, vals, "exponential")
    assert abs(fit.exponent_or_rate + 0.1) < 1e-8


def test_decay_fit_kind_validation():
    with pytest.raises(ValueError):
        DecayFit(kind="polynomial", exponent_or_rate=1.0,
                 window=(0, 1), r2=1.0)
