"""Reduced phase equation psi_t = D_eff psi_xx - c_g psi_x + beta psi_x^2
and the error-function reference profile for the phase of the wake."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize as opt
import scipy.sparse as sp
import scipy.sparse.linalg as spla
import scipy.special

from .core import Grid
from .stepper import IntegrationBlowup, diff_matrices


class FitFailed(RuntimeError):
    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = residual_history or []


@dataclass(frozen=True)
class EikonalConfig:
    d_eff: float
    c_g: float
    beta: float
    grid: Grid
    dt: float

    def __post_init__(self):
        if self.d_eff <= 0:
            raise ValueError("d_eff must be positive")
        if self.dt <= 0:
            raise ValueError("dt must be positive")


def eikonal_run(psi0: np.ndarray, cfg: EikonalConfig, t_end: float,
                record_every: int = 50):
    """Integrate the phase equation; returns (times, list of psi arrays).

    Crank-Nicolson on the linear advection-diffusion part, explicit Heun on
    the quadratic gradient term, Neumann boundaries.
    """
    grid = cfg.grid
    psi = np.asarray(psi0, dtype=float)
    if psi.shape != (grid.n,):
        raise ValueError("psi0 must be sampled on cfg.grid")
    D1, D2 = diff_matrices(grid, "neumann")
    L = cfg.d_eff * D2 - cfg.c_g * D1
    I = sp.identity(grid.n, format="csc")
    solve = spla.factorized((I - 0.5 * cfg.dt * L).tocsc())
    B = (I + 0.5 * cfg.dt * L).tocsc()

    def quad(p):
        g = D1 @ p
        return cfg.beta * g * g

    times = [0.0]
    frames = [psi.copy()]
    n_steps = int(round(t_end / cfg.dt))
    for i in range(1, n_steps + 1):
        q0 = quad(psi)
        q1 = quad(psi + cfg.dt * q0)
        psi = solve(B @ psi + cfg.dt * 0.5 * (q0 + q1))
        if not np.all(np.isfinite(psi)):
            raise IntegrationBlowup(i, i * cfg.dt)
        if i % record_every == 0 or i == n_steps:
            times.append(i * cfg.dt)
            frames.append(psi.copy())
    return np.array(times), frames


def erf_unnormalized(z):
    """erf(z) = integral of e^{-w^2} from -infinity to z; erf(+inf) = sqrt(pi)."""
    return 0.5 * np.sqrt(np.pi) * (1.0 + scipy.special.erf(np.asarray(z, dtype=float)))


def erf_profile(xi, t, c_g, d0, amplitude, offset):
    """offset + amplitude * erf((xi - c_g t)/sqrt(d0 (1+t))), unnormalized erf."""
    if d0 <= 0:
        raise ValueError("d0 must be positive")
    if t < 0:
        raise ValueError("t must be nonnegative")
    z = (np.asarray(xi, dtype=float) - c_g * t) / np.sqrt(d0 * (1.0 + t))
    return offset + amplitude * erf_unnormalized(z)


def heat_solution(psi0: np.ndarray, grid: Grid, d_eff: float, c_g: float,
                  t: float) -> np.ndarray:
    """Exact solution of psi_t = d_eff psi_xx - c_g psi_x by kernel convolution.

    The initial data is extended by its boundary values, which matches
    Neumann boundaries as long as the domain comfortably contains the
    advected-diffused transition region.
    """
    if t == 0:
        return np.asarray(psi0, dtype=float).copy()
    x = grid.x
    pad = 8.0 * np.sqrt(2.0 * d_eff * t) + abs(c_g) * t + 10.0
    n_pad = int(np.ceil(pad / grid.h))
    src = np.concatenate([np.full(n_pad, psi0[0]), psi0,
                          np.full(n_pad, psi0[-1])])
    xs = grid.x_min + grid.h * (np.arange(src.size) - n_pad)
    out = np.empty_like(x)
    denom = np.sqrt(4.0 * np.pi * d_eff * t)
    for i, xi in enumerate(x):
        k = np.exp(-((xi - c_g * t - xs) ** 2) / (4.0 * d_eff * t)) / denom
        out[i] = np.trapezoid(k * src, dx=grid.h)
    return out


def fit_erf(phase_field: np.ndarray, xi: np.ndarray, t: float, c_g: float):
    """Least-squares fit of offset + amplitude*erf((xi - c_g t)/sqrt(d0(1+t))).

    Returns (d0, amplitude, offset, residual) with residual the RMS misfit.
    """
    phase_field = np.asarray(phase_field, dtype=float)
    xi = np.asarray(xi, dtype=float)
    span = phase_field[-1] - phase_field[0]
    amp0 = span / np.sqrt(np.pi) if span != 0 else 1.0
    off0 = phase_field[0]
    d0_0 = 1.0

    def model(theta):
        log_d0, amp, off = theta
        return erf_profile(xi, t, c_g, np.exp(log_d0), amp, off)

    history = []

    def resid(theta):
        r = model(theta) - phase_field
        history.append(float(np.sqrt(np.mean(r * r))))
        return r

    res = opt.least_squares(resid, x0=[np.log(d0_0), amp0, off0],
                            method="lm", max_nfev=2000)
    if not res.success:
        raise FitFailed(f"erf fit did not converge: {res.message}", history)
    d0 = float(np.exp(res.x[0]))
    amplitude, offset = float(res.x[1]), float(res.x[2])
    residual = float(np.sqrt(np.mean(res.fun * res.fun)))
    return d0, amplitude, offset, residual
