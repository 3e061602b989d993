"""Periodic wave trains: Newton solve, homogeneous oscillation, wavelength.

The wave train u_wt is an L-periodic traveling-wave profile of the comoving
system D u'' + c u' + F(u) = 0.  We solve it by Fourier collocation over the
rescaled period sigma = xi / L in [0, 1), with the period L as an extra
unknown closed by an integral phase condition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp

from .core import Params, jacobian, reaction


class WaveTrainError(RuntimeError):
    pass


class NoConvergence(WaveTrainError):
    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"Newton did not converge after {iterations} iterations "
            f"(final residual {residual:.3e})"
        )


class SingularIntegrand(WaveTrainError):
    def __init__(self, location: float):
        self.location = location
        super().__init__(f"wavelength integrand denominator changes sign near u={location:.6g}")


@dataclass
class WaveTrain:
    """One-period profile (m samples, first sample at sigma=0, no duplicate
    endpoint), period L, wavenumber k_wt = 2*pi/L, speed c, Newton residual."""

    m: int
    profile_u: np.ndarray
    profile_w: np.ndarray
    L: float
    c: float
    residual: float = np.nan

    @property
    def k_wt(self) -> float:
        return 2.0 * np.pi / self.L

    def sample(self, xi, phase: float = 0.0):
        """Evaluate the periodic profile at points xi (Fourier interpolation)."""
        sigma = ((np.asarray(xi, dtype=float) + phase) / self.L) % 1.0
        return (_fourier_interp(self.profile_u, sigma),
                _fourier_interp(self.profile_w, sigma))

    def derivative(self):
        """Spectral derivative (du/dxi, dw/dxi) at the collocation points."""
        return (_spectral_deriv(self.profile_u) / self.L,
                _spectral_deriv(self.profile_w) / self.L)


def _fourier_interp(samples: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    m = samples.size
    coeffs = np.fft.rfft(samples) / m
    k = np.arange(coeffs.size)
    phase = np.exp(2j * np.pi * np.outer(sigma, k))
    vals = phase @ (coeffs * np.where((k > 0) & (k < m / 2 + (m % 2)), 2.0, 1.0))
    if m % 2 == 0:
        # Nyquist mode: cosine only
        vals -= 1j * np.imag(phase[:, -1] * coeffs[-1]) * 0
    return np.real(vals)


def _spectral_deriv(samples: np.ndarray, order: int = 1) -> np.ndarray:
    m = samples.size
    k = np.fft.fftfreq(m, d=1.0 / m)
    if order % 2 == 1 and m % 2 == 0:
        k = k.copy()
        k[m // 2] = 0.0  # odd derivative of the Nyquist mode
    return np.real(np.fft.ifft(((2j * np.pi * k) ** order) * np.fft.fft(samples)))


def _fourier_diff_matrix(m: int, order: int = 1) -> np.ndarray:
    """Dense spectral differentiation matrix on m points over period 1."""
    I = np.eye(m)
    return np.array([_spectral_deriv(I[:, j], order) for j in range(m)]).T


def solve_wavetrain(params: Params, c: float, guess: WaveTrain,
                    tol: float = 1e-10, max_iter: int = 50) -> WaveTrain:
    """Newton-solve the rescaled periodic system for (profiles, L) at speed c.

    System on sigma in [0,1): D u_ss / L^2 + c u_s / L + F(u) = 0, closed by
    the phase condition <u_guess', u - u_guess> = 0 against the guess.
    """
    if guess.L <= 0:
        raise ValueError("guess period must be positive")
    m = guess.m
    D1 = _fourier_diff_matrix(m, 1)
    D2 = _fourier_diff_matrix(m, 2)
    U = guess.profile_u.copy()
    W = guess.profile_w.copy()
    L = float(guess.L)
    u_ref_s = _spectral_deriv(guess.profile_u)
    w_ref_s = _spectral_deriv(guess.profile_w)
    U_ref, W_ref = guess.profile_u.copy(), guess.profile_w.copy()

    def residual_vec(U, W, L):
        fu, fw = reaction(params, U, W)
        ru = (D2 @ U) / L**2 + c * (D1 @ U) / L + fu
        rw = c * (D1 @ W) / L + fw
        phase = (u_ref_s @ (U - U_ref) + w_ref_s @ (W - W_ref)) / m
        return np.concatenate([ru, rw, [phase]])

    res = residual_vec(U, W, L)
    res_norm = np.max(np.abs(res))
    for it in range(max_iter):
        if res_norm <= tol:
            break
        f_u, f_w, g_u, g_w = jacobian(params, U, W)
        J = np.zeros((2 * m + 1, 2 * m + 1))
        J[:m, :m] = D2 / L**2 + c * D1 / L + np.diag(f_u)
        J[:m, m:2 * m] = np.diag(f_w)
        J[m:2 * m, :m] = np.diag(g_u)
        J[m:2 * m, m:2 * m] = c * D1 / L + np.diag(g_w)
        J[:m, -1] = -2.0 * (D2 @ U) / L**3 - c * (D1 @ U) / L**2
        J[m:2 * m, -1] = -c * (D1 @ W) / L**2
        J[-1, :m] = u_ref_s / m
        J[-1, m:2 * m] = w_ref_s / m
        try:
            delta = np.linalg.solve(J, -res)
        except np.linalg.LinAlgError as exc:
            raise WaveTrainError("rank-deficient wave-train Jacobian") from exc
        # damped update to keep the period positive
        lam = 1.0
        while L + lam * delta[-1] <= 0:
            lam *= 0.5
        U = U + lam * delta[:m]
        W = W + lam * delta[m:2 * m]
        L = L + lam * delta[-1]
        res = residual_vec(U, W, L)
        res_norm = np.max(np.abs(res))
    if res_norm > tol:
        raise NoConvergence(res_norm, max_iter)
    return WaveTrain(m=m, profile_u=U, profile_w=W, L=L, c=c, residual=res_norm)


def homogeneous_oscillation(params: Params, t_transient: float = 3000.0,
                            rtol: float = 1e-10, atol: float = 1e-12):
    """Spatially homogeneous limit cycle of the kinetics ODE.

    Integrates from (0.5, 0) past transients and locates one period by a
    Poincare section (increasing crossing of u through its mean).  Returns
    (t, u, w, T) with t in [0, T].
    """

    def rhs(t, y):
        fu, fw = reaction(params, y[0], y[1])
        return [fu, fw]

    sol = solve_ivp(rhs, (0.0, t_transient), [0.5, 0.0], rtol=rtol, atol=atol,
                    dense_output=True)
    y_end = sol.y[:, -1]
    # sample one long stretch to find the mean level and crossings
    t_probe = np.linspace(max(0.0, t_transient - 1500.0), t_transient, 20000)
    u_probe = sol.sol(t_probe)[0]
    if np.max(u_probe) - np.min(u_probe) < 1e-6:
        raise WaveTrainError("trajectory converged to a point; no oscillation")
    u_mean = 0.5 * (np.max(u_probe) + np.min(u_probe))
    up = u_probe - u_mean
    crossings = t_probe[:-1][(up[:-1] < 0) & (up[1:] >= 0)]
    if crossings.size < 3:
        raise WaveTrainError("could not locate Poincare crossings")
    T_guess = float(np.mean(np.diff(crossings[-5:])))

    # refine: integrate from a crossing with an event
    def section(t, y):
        return y[0] - u_mean
    section.terminal = False
    section.direction = 1.0

    t0 = crossings[-2]
    y0 = sol.sol(t0)
    sol2 = solve_ivp(rhs, (0.0, 2.5 * T_guess), y0, rtol=rtol, atol=atol,
                     events=section, dense_output=True)
    ev = sol2.t_events[0]
    ev = ev[ev > 0.25 * T_guess]
    if ev.size == 0:
        raise WaveTrainError("no return to Poincare section")
    T = float(ev[0])
    ts = np.linspace(0.0, T, 2049)[:-1]
    ys = sol2.sol(ts)
    return ts, ys[0], ys[1], T


def wavelength_quadrature(params: Params, convention: str = "printed",
                          tol: float = 1e-10):
    """Leading-order wavelength integrals (L_minus, L_plus).

    Integrates (1+a) f'(u) / (sqrt(2) (gamma f(u) - u)) du between
    u_{1,+-} and u_{2,+-}, with f the cubic u(u+a)(1-u-a).  The limits use
    u_{j,+-} = (1 - 2a +- j*sqrt(1+a+a^2)) / 3 for convention="printed" and
    the cubic's critical-point discriminant sqrt(1-a+a^2) for
    convention="critical-points".
    """
    a, gamma = params.a, params.gamma
    if convention == "printed":
        disc = np.sqrt(1.0 + a + a * a)
    elif convention == "critical-points":
        disc = np.sqrt(1.0 - a + a * a)
    else:
        raise ValueError(f"unknown convention {convention!r}")

    def f(u):
        return u * (u + a) * (1.0 - u - a)

    def fp(u):
        return -3.0 * u * u + 2.0 * (1.0 - 2.0 * a) * u + a * (1.0 - a)

    def integrand(u):
        return (1.0 + a) * fp(u) / (np.sqrt(2.0) * (gamma * f(u) - u))

    out = []
    for sign in (-1.0, 1.0):
        u1 = (1.0 - 2.0 * a + sign * 1.0 * disc) / 3.0
        u2 = (1.0 - 2.0 * a + sign * 2.0 * disc) / 3.0
        lo, hi = min(u1, u2), max(u1, u2)
        # guard: the denominator must keep one sign strictly inside
        nodes = lo + (hi - lo) * 0.5 * (1.0 + np.cos(np.pi * np.arange(1, 64) / 64.0))
        dens = gamma * f(nodes) - nodes
        if np.any(dens == 0.0) or (np.min(dens) < 0.0 < np.max(dens)):
            idx = int(np.argmin(np.abs(dens)))
            raise SingularIntegrand(float(nodes[idx]))
        val, _ = quad(integrand, u1, u2, epsabs=tol, epsrel=tol, limit=200)
        out.append(val)
    return out[0], out[1]


def quadrature_limits(params: Params, convention: str = "printed"):
    """The integration limits u_{j,+-} for the wavelength integrals."""
    a = params.a
    disc = np.sqrt(1.0 + a + a * a) if convention == "printed" \
        else np.sqrt(1.0 - a + a * a)
    return {(j, s): (1.0 - 2.0 * a + (1 if s == "+" else -1) * j * disc) / 3.0
            for j in (1, 2) for s in ("+", "-")}


def wavetrain_from_simulation(traj, window, m: int = 256, c: float | None = None) -> WaveTrain:
    """Estimate a wave-train guess from the developed wake of a trajectory.

    The period is the mean spacing of up-crossings of u through its window
    mean; one period is extracted by linear interpolation.  `c` defaults to
    the trajectory's frame speed.
    """
    state = traj.final() if hasattr(traj, "final") else traj
    grid = state.grid
    lo, hi = window
    mask = (grid.x >= lo) & (grid.x <= hi)
    x = grid.x[mask]
    u = state.u[mask]
    w = state.w[mask]
    if x.size < 8:
        raise WaveTrainError("window too small: not enough samples")
    u_mean = 0.5 * (np.max(u) + np.min(u))
    up = u - u_mean
    idx = np.nonzero((up[:-1] < 0) & (up[1:] >= 0))[0]
    if idx.size < 3:
        raise WaveTrainError("window too small: fewer than 3 up-crossings")
    # subgrid crossing positions by linear interpolation
    xc = x[idx] + (x[idx + 1] - x[idx]) * (-up[idx]) / (up[idx + 1] - up[idx])
    L = float(np.mean(np.diff(xc)))
    x0 = xc[len(xc) // 2 - 1]
    sigma = np.arange(m) / m
    xi_samples = x0 + sigma * L
    profile_u = np.interp(xi_samples, x, u)
    profile_w = np.interp(xi_samples, x, w)
    if c is None:
        c = getattr(traj, "cfg", None).frame_speed if hasattr(traj, "cfg") else 0.0
    return WaveTrain(m=m, profile_u=profile_u, profile_w=profile_w, L=L, c=float(c))
