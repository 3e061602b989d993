"""Measurements on trajectories: wake wavenumber, phase extraction, defect
tracking, decay-rate fits, light-cone norms, and the asymptotic phase."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Grid, State, Weight
from .spectral import PointSpectrumReport, ptr


class DiagnosticsError(RuntimeError):
    pass


class InsufficientOscillations(DiagnosticsError):
    pass


class LowCoherence(DiagnosticsError):
    pass


class NoDefect(DiagnosticsError):
    pass


class PhaseUndetermined(DiagnosticsError):
    pass


@dataclass
class DecayFit:
    kind: str  # "algebraic" or "exponential"
    exponent_or_rate: float
    window: tuple
    r2: float

    def __post_init__(self):
        if self.kind not in ("algebraic", "exponential"):
            raise ValueError(f"unknown fit kind {self.kind!r}")


def measure_wavenumber(state: State, window, return_spread: bool = False):
    """Wake wavenumber 2*pi / (mean spacing of upward mean-crossings).

    With return_spread=True also returns the relative standard deviation of
    the crossing spacings, a coherence figure (large for disordered wakes).
    """
    lo, hi = window
    mask = (state.grid.x >= lo) & (state.grid.x <= hi)
    x = state.grid.x[mask]
    u = state.u[mask]
    if x.size < 8:
        raise InsufficientOscillations("window contains too few samples")
    up = u - 0.5 * (np.max(u) + np.min(u))
    idx = np.nonzero((up[:-1] < 0) & (up[1:] >= 0))[0]
    if idx.size < 4:
        raise InsufficientOscillations(
            f"need >= 3 oscillations in window, found {max(idx.size - 1, 0)}")
    xc = x[idx] + (x[idx + 1] - x[idx]) * (-up[idx]) / (up[idx + 1] - up[idx])
    spacings = np.diff(xc)
    k = 2.0 * np.pi / float(np.mean(spacings))
    if return_spread:
        spread = float(np.std(spacings) / np.mean(spacings))
        return k, spread
    return k


def extract_phase(state: State, wt, window, stride: float | None = None,
                  coherence_min: float = 0.5):
    """Phase of the wake pattern relative to the wave train, by sliding
    circular cross-correlation over one-period windows.

    Returns (centers, psi) with psi unwrapped along xi by nearest-branch
    continuation (jump threshold L/2), in the convention
    u(xi) ~ u_wt(xi + psi(xi)).
    """
    L, m = wt.L, wt.m
    lo, hi = window
    if hi - lo < 2 * L:
        raise InsufficientOscillations("window shorter than two periods")
    if stride is None:
        stride = L / 8.0
    template = wt.profile_u - np.mean(wt.profile_u)
    ft = np.fft.fft(template)
    centers, psis = [], []
    xi0 = lo
    while xi0 + L <= hi:
        s = xi0 + L * np.arange(m) / m
        y = np.interp(s, state.grid.x, state.u)
        y = y - np.mean(y)
        corr = np.real(np.fft.ifft(np.fft.fft(y) * np.conj(ft)))
        # normalized coherence of the best alignment
        denom = np.linalg.norm(y) * np.linalg.norm(template)
        if denom == 0:
            raise LowCoherence("flat signal in correlation window")
        j = int(np.argmax(corr))
        if corr[j] / denom < coherence_min:
            raise LowCoherence(
                f"correlation peak {corr[j] / denom:.2f} below {coherence_min} "
                f"at xi={xi0 + L / 2:.1f}")
        # quadratic refinement of the circular argmax
        cm, c0, cp = corr[j - 1], corr[j], corr[(j + 1) % m]
        delta = 0.5 * (cm - cp) / (cm - 2 * c0 + cp) if (cm - 2 * c0 + cp) != 0 else 0.0
        # correlation peak at k means y_j ~ template_{j-k}, so the pattern
        # sits at U(sigma - k/m + ...): u(xi0 + sigma L) = U(sigma - shift)
        shift = (j + delta) / m
        psi = (-shift * L - xi0) % L
        centers.append(xi0 + L / 2)
        psis.append(psi)
        xi0 += stride
    centers = np.array(centers)
    psis = np.array(psis)
    # nearest-branch unwrapping along xi
    for i in range(1, psis.size):
        d = psis[i] - psis[i - 1]
        psis[i] -= L * np.round(d / L)
    return centers, psis


def linear_phase(state: State, fp, window, win_len: float,
                 stride: float | None = None):
    """Phase of a linearized perturbation by windowed projection onto the
    translational mode: psi(xi0) = <v, u_ps'>_win / <u_ps', u_ps'>_win.

    Valid in the linear regime, where u - u_ps(. + psi) ~ psi u_ps'.  Returns
    (centers, psi).
    """
    lo, hi = window
    if stride is None:
        stride = win_len / 8.0
    du, dw = fp.derivative_on(state.grid)
    x = state.grid.x
    centers, psis = [], []
    xi0 = lo
    while xi0 + win_len <= hi:
        m = (x >= xi0) & (x < xi0 + win_len)
        denom = np.sum(du[m] ** 2 + dw[m] ** 2)
        if denom == 0:
            xi0 += stride
            continue
        num = np.sum(state.u[m] * du[m] + state.w[m] * dw[m])
        centers.append(xi0 + win_len / 2)
        psis.append(num / denom)
        xi0 += stride
    if not centers:
        raise DiagnosticsError("empty projection window")
    return np.array(centers), np.array(psis)


def defect_speed(times, centers_list, psi_list, span_frac: float = 0.6):
    """Speed of the phase defect: slope of the psi-midlevel crossing vs t.

    `centers_list`/`psi_list` hold one extract_phase output per snapshot.
    Plateau levels come from the outer 10% of each profile; snapshots whose
    plateau span is below `span_frac` of the largest observed span (defect
    not yet formed, or already out of the window) are skipped.
    """
    def plateaus(psi):
        k = max(psi.size // 10, 2)
        return float(np.mean(psi[:k])), float(np.mean(psi[-k:]))

    spans = [abs(np.subtract(*plateaus(psi))) for psi in psi_list]
    span_ref = max(spans)
    if span_ref == 0.0:
        raise NoDefect("flat phase in every snapshot")
    ts, xs = [], []
    for t, centers, psi, span in zip(times, centers_list, psi_list, spans):
        if span < span_frac * span_ref:
            continue
        left, right = plateaus(psi)
        d = psi - 0.5 * (left + right)
        idx = np.nonzero(d[:-1] * d[1:] <= 0)[0]
        if idx.size == 0:
            continue
        # pick the crossing nearest the centroid of |grad psi|
        grad = np.abs(np.diff(psi))
        cent = float(np.sum(0.5 * (centers[:-1] + centers[1:]) * grad)
                     / np.sum(grad))
        i = idx[np.argmin(np.abs(centers[idx] - cent))]
        frac = -d[i] / (d[i + 1] - d[i]) if d[i + 1] != d[i] else 0.0
        xs.append(centers[i] + frac * (centers[i + 1] - centers[i]))
        ts.append(t)
    if len(ts) < 10:
        raise NoDefect(f"defect midpoint trackable in only {len(ts)} snapshots")
    slope, _ = np.polyfit(ts, xs, 1)
    return float(slope)


def decay_fit(times, values, kind: str, trailing_fraction: float = 0.6) -> DecayFit:
    """Least-squares decay fit over the trailing window.

    algebraic: log(value) against log(1+t); exponential: against t.
    Nonpositive values are filtered out.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = values > 0
    times, values = times[keep], values[keep]
    if times.size < 10:
        raise DiagnosticsError(f"need >= 10 positive samples, got {times.size}")
    t_cut = times[0] + (1.0 - trailing_fraction) * (times[-1] - times[0])
    m = times >= t_cut
    t, v = times[m], np.log(values[m])
    absc = np.log(1.0 + t) if kind == "algebraic" else t
    slope, intercept = np.polyfit(absc, v, 1)
    pred = slope * absc + intercept
    ss_res = float(np.sum((v - pred) ** 2))
    ss_tot = float(np.sum((v - np.mean(v)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(kind=kind, exponent_or_rate=float(slope),
                    window=(float(t[0]), float(t[-1])), r2=max(0.0, min(1.0, r2)))


def lightcone_norms(traj, fp, psi_inf: float, c_g: float,
                    delta_c: float | None = None, eta0: float = 0.4,
                    xi_cap: float = 50.0):
    """Weighted sup misfits along the two light cones, per snapshot.

    Right cone: sup over (c_g+delta_c) t <= xi <= xi_cap of
    omega_0 |u - u_ps(. + psi_inf)|.  Left cone: sup over xi <= (c_g-delta_c) t
    of omega_0 |u - u_ps|.  Snapshots whose cone is empty are skipped.
    Returns (times_right, right_series, times_left, left_series).
    """
    if delta_c is None:
        delta_c = abs(c_g) / 4.0
    if c_g + delta_c >= 0:
        raise ValueError("need c_g + delta_c < 0")
    w0 = Weight(0.0, eta0)
    t_r, s_r, t_l, s_l = [], [], [], []
    for snap in traj.snapshots:
        x = snap.grid.x
        wx = w0(x)
        u_sh, w_sh = fp.sample_on(snap.grid, shift=psi_inf)
        u_un, w_un = fp.sample_on(snap.grid)
        right = (x >= (c_g + delta_c) * snap.t) & (x <= xi_cap)
        left = x <= (c_g - delta_c) * snap.t
        if np.any(right):
            mis = np.maximum(np.abs(snap.u - u_sh), np.abs(snap.w - w_sh))
            t_r.append(snap.t)
            s_r.append(float(np.max(wx[right] * mis[right])))
        if np.any(left):
            mis = np.maximum(np.abs(snap.u - u_un), np.abs(snap.w - w_un))
            t_l.append(snap.t)
            s_l.append(float(np.max(wx[left] * mis[left])))
    return np.array(t_r), np.array(s_r), np.array(t_l), np.array(s_l)


def asymptotic_phase(traj, fp, report: PointSpectrumReport,
                     w0_u: np.ndarray, w0_w: np.ndarray,
                     eta0: float = 0.4, K: float = 50.0,
                     s_max: float = 5.0):
    """Measured vs predicted asymptotic shift of the front.

    Measured: argmin over s of the omega_0-weighted sup misfit of the final
    snapshot against u_ps(. + s) on xi in [-K, K].  Predicted: the
    translational-mode functional applied to omega_0 * (initial perturbation),
    sampled on the report grid.
    """
    final = traj.final()
    grid = final.grid
    x = grid.x
    band = (x >= -K) & (x <= K)
    w0 = Weight(0.0, eta0)
    wx = w0(x[band])

    def misfit(s):
        u_s, w_s = fp.sample_on(grid, shift=s)
        return float(np.max(wx * np.maximum(np.abs(final.u - u_s)[band],
                                            np.abs(final.w - w_s)[band])))

    ss = np.linspace(-s_max, s_max, 201)
    vals = np.array([misfit(s) for s in ss])
    j = int(np.argmin(vals))
    if j in (0, ss.size - 1):
        raise PhaseUndetermined("misfit minimum on the search boundary")
    if np.max(vals) - vals[j] < 1e-12:
        raise PhaseUndetermined("flat misfit landscape")
    # golden-section refinement around the coarse minimum
    from scipy.optimize import minimize_scalar
    res = minimize_scalar(misfit, bracket=(ss[j - 1], ss[j], ss[j + 1]))
    psi_inf_measured = float(res.x)

    rg = report.grid
    wpu = np.interp(rg.x, x, w0_u, left=0.0, right=0.0)
    wpw = np.interp(rg.x, x, w0_w, left=0.0, right=0.0)
    w0r = Weight(0.0, report.eta0)
    ptr_predicted = ptr(w0r(rg.x) * wpu, w0r(rg.x) * wpw, report)
    return psi_inf_measured, float(ptr_predicted)
