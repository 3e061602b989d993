"""Front extraction: position tracking, speed measurement, comoving profile,
and leading-edge decay rate, all from direct simulation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Grid, Params, State


class FrontError(RuntimeError):
    pass


class FrontNotFound(FrontError):
    pass


class FrontNotConverged(FrontError):
    pass


class InsufficientData(FrontError):
    pass


@dataclass
class FrontProfile:
    """Comoving front profile with the interface near xi = 0."""

    grid: Grid
    u_ps: np.ndarray
    w_ps: np.ndarray
    c_ps: float
    eta_ps: float = np.nan
    alignment_residual: float = np.nan

    def sample_on(self, grid: Grid, shift: float = 0.0):
        """Interpolate (u_ps, w_ps) onto another grid, shifted by `shift`.

        Right of the stored window the profile is extended by zero (the tail
        is below resolution there); left of it by the boundary value."""
        x = grid.x + shift
        u = np.interp(x, self.grid.x, self.u_ps, right=0.0)
        w = np.interp(x, self.grid.x, self.w_ps, right=0.0)
        return u, w

    def derivative_on(self, grid: Grid, shift: float = 0.0):
        """Centered finite-difference derivative sampled on `grid`.

        Extended by zero beyond the stored window on both sides."""
        du = np.gradient(self.u_ps, self.grid.h)
        dw = np.gradient(self.w_ps, self.grid.h)
        x = grid.x + shift
        return (np.interp(x, self.grid.x, du, left=0.0, right=0.0),
                np.interp(x, self.grid.x, dw, left=0.0, right=0.0))


def front_position(state: State, level: float) -> float:
    """Rightmost downward crossing of u through `level`, linearly interpolated."""
    u = state.u
    x = state.grid.x
    if not (np.min(u) < level < np.max(u)):
        raise FrontNotFound(f"u does not straddle level {level}")
    idx = np.nonzero((u[:-1] >= level) & (u[1:] < level))[0]
    if idx.size == 0:
        raise FrontNotFound("no downward crossing of the level")
    i = idx[-1]
    return float(x[i] + (x[i + 1] - x[i]) * (u[i] - level) / (u[i] - u[i + 1]))


def front_positions(traj, level: float):
    """Per-snapshot front positions; snapshots without a front are skipped."""
    ts, pos = [], []
    for s in traj.snapshots:
        try:
            pos.append(front_position(s, level))
            ts.append(s.t)
        except FrontNotFound:
            continue
    return np.array(ts), np.array(pos)


def measure_speed(times: np.ndarray, positions: np.ndarray,
                  trailing_fraction: float = 0.5):
    """Least-squares slope of position vs time over the trailing window."""
    times = np.asarray(times, dtype=float)
    positions = np.asarray(positions, dtype=float)
    if times.size < 10:
        raise InsufficientData(f"need >= 10 samples, got {times.size}")
    t_cut = times[0] + (1.0 - trailing_fraction) * (times[-1] - times[0])
    mask = times >= t_cut
    t, p = times[mask], positions[mask]
    A = np.column_stack([t, np.ones_like(t)])
    coef, res, *_ = np.linalg.lstsq(A, p, rcond=None)
    n = t.size
    resid = p - A @ coef
    sigma2 = np.sum(resid**2) / max(n - 2, 1)
    tvar = np.sum((t - np.mean(t)) ** 2)
    stderr = float(np.sqrt(sigma2 / tvar)) if tvar > 0 else np.inf
    return float(coef[0]), stderr


def extract_front(traj, params: Params, level: float | None = None,
                  n_average: int = 8, window: tuple = (-50.0, 50.0),
                  residual_tol: float = 0.05) -> FrontProfile:
    """Average the trailing snapshots in the frame of the measured front.

    Shifts the final `n_average` snapshots by their measured positions,
    interpolates onto a common comoving grid, and averages.  The alignment
    residual is the max pairwise sup-difference of the aligned snapshots on
    the given comoving window.
    """
    if level is None:
        level = 0.5 * (1.0 - params.a)
    ts, pos = front_positions(traj, level)
    if ts.size < n_average:
        raise FrontNotFound("trajectory does not exhibit a formed front")
    c_ps, _ = measure_speed(ts, pos)
    grid0 = traj.snapshots[-1].grid
    xi_min = grid0.x_min - pos[-1]
    xi_max = grid0.x_max - pos[-n_average]
    n = int(np.floor((xi_max - xi_min) / grid0.h)) + 1
    cgrid = Grid(xi_min, xi_min + (n - 1) * grid0.h, n)

    aligned_u, aligned_w = [], []
    snaps = traj.snapshots[-n_average:]
    for s, p in zip(snaps, pos[-n_average:]):
        xi = cgrid.x + p
        # clamp to the snapshot domain; edges are constant states
        u = np.interp(xi, s.grid.x, s.u)
        w = np.interp(xi, s.grid.x, s.w)
        aligned_u.append(u)
        aligned_w.append(w)
    aligned_u = np.array(aligned_u)
    aligned_w = np.array(aligned_w)
    wmask = (cgrid.x >= window[0]) & (cgrid.x <= window[1])
    resid = 0.0
    for i in range(len(snaps)):
        for j in range(i + 1, len(snaps)):
            resid = max(resid, float(np.max(np.abs(
                aligned_u[i][wmask] - aligned_u[j][wmask]))))
    if resid > residual_tol:
        raise FrontNotConverged(
            f"alignment residual {resid:.3g} exceeds {residual_tol} "
            "(front still transient or modulated)")
    return FrontProfile(grid=cgrid, u_ps=np.mean(aligned_u, axis=0),
                        w_ps=np.mean(aligned_w, axis=0), c_ps=c_ps,
                        alignment_residual=resid)


def fit_tail_decay(profile: FrontProfile, floor: float = 1e-10,
                   lo: float = 1e-8, hi: float = 1e-2):
    """Exponential decay rate of the leading edge: slope of -log|u|.

    Fits on the window where lo <= |u| <= hi ahead of the interface; the
    window must span at least 3 decades above the floor.
    """
    x = profile.grid.x
    au = np.abs(profile.u_ps)
    # restrict to the monotone tail right of the last value above hi
    above = np.nonzero(au > hi)[0]
    start = above[-1] + 1 if above.size else 0
    mask = np.zeros_like(au, dtype=bool)
    mask[start:] = (au[start:] >= max(lo, floor)) & (au[start:] <= hi)
    xs, ls = x[mask], np.log(au[mask])
    if xs.size < 10 or (np.max(ls) - np.min(ls)) < 3 * np.log(10.0):
        raise InsufficientData(
            "leading-edge window does not span 3 decades above the floor")
    slope, intercept = np.polyfit(xs, ls, 1)
    pred = slope * xs + intercept
    ss_res = float(np.sum((ls - pred) ** 2))
    ss_tot = float(np.sum((ls - np.mean(ls)) ** 2))
    r2 = 1.0 - ss_res / ss_tot
    profile.eta_ps = float(-slope)
    return float(-slope), r2
