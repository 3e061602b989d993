"""Unit tests for the reduced phase equation and the erf reference profile."""

import numpy as np
import pytest

from invasionlab.core import Grid
from invasionlab.eikonal import EikonalConfig, erf_profile, erf_unnormalized, \
    eikonal_run, fit_erf, heat_solution


def test_config_validation():
    grid = Grid(-10.0, 10.0, 101)
    with pytest.raises(ValueError):
        EikonalConfig(d_eff=-1.0, c_g=0.0, beta=0.0, grid=grid, dt=0.1)
    with pytest.raises(ValueError):
        EikonalConfig(d_eff=1.0, c_g=0.0, beta=0.0, grid=grid, dt=0.0)


def test_erf_unnormalized_limits():
    assert erf_unnormalized(-50.0) == pytest.approx(0.0, abs=1e-15)
    assert erf_unnormalized(50.0) == pytest.approx(np.sqrt(np.pi), abs=1e-15)
    assert erf_unnormalized(0.0) == pytest.approx(0.5 * np.sqrt(np.pi))


def test_erf_profile_validation_and_translation():
    xi = np.linspace(-10, 10, 101)
    with pytest.raises(ValueError):
        erf_profile(xi, 1.0, 0.0, -1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        erf_profile(xi, -1.0, 0.0, 1.0, 1.0, 0.0)
    # at c_g != 0 the profile is the c_g = 0 one translated by c_g * t
    t, cg = 4.0, -0.5
    a = erf_profile(xi, t, cg, 2.0, 1.3, 0.1)
    b = erf_profile(xi - cg * t, t, 0.0, 2.0, 1.3, 0.1)
    assert np.allclose(a, b)


def test_eikonal_run_preserves_constants():
    grid = Grid(-20.0, 20.0, 401)
    cfg = EikonalConfig(d_eff=1.2, c_g=-0.5, beta=0.3, grid=grid, dt=0.05)
    times, frames = eikonal_run(np.full(grid.n, 0.7), cfg, t_end=5.0,
                                record_every=20)
    assert np.allclose(frames[-1], 0.7, atol=1e-12)
    assert times[-1] == pytest.approx(5.0)


def test_eikonal_beta_zero_matches_exact_heat_kernel():
    grid = Grid(-60.0, 60.0, 1201)
    d_eff, c_g = 1.157, -0.52
    cfg = EikonalConfig(d_eff=d_eff, c_g=c_g, beta=0.0, grid=grid, dt=0.01)
    psi0 = np.tanh(grid.x / 3.0)
    t_end = 8.0
    _, frames = eikonal_run(psi0, cfg, t_end, record_every=10 ** 6)
    exact = heat_solution(psi0, grid, d_eff, c_g, t_end)
    assert np.max(np.abs(frames[-1] - exact)) < 1e-2


def test_fit_erf_recovers_synthetic_parameters():
    xi = np.linspace(-80, 40, 601)
    t, cg = 25.0, -0.52
    d0, amp, off = 2.3, 0.17, 0.05
    data = erf_profile(xi, t, cg, d0, amp, off)
    d0_f, amp_f, off_f, resid = fit_erf(data, xi, t, cg)
    assert abs(d0_f - d0) < 1e-6
    assert abs(amp_f - amp) < 1e-9
    assert abs(off_f - off) < 1e-9
    assert resid < 1e-10


def test_fit_erf_reports_misfit_on_nonerf_data():
    xi = np.linspace(-40, 40, 401)
    data = np.tanh(xi / 1.0) * 0.2  # sharper than any erf at t=25
    d0, amp, off, resid = fit_erf(data, xi, 25.0, 0.0)
    assert resid > 1e-4  # honest nonzero residual
    assert d0 > 0
