"""Eigenvalue computations: dispersion relation and spreading speed,
Floquet-Bloch spectra of the wave train, and the weighted point spectrum of
the front with its adjoint functional.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import Grid, Params, Weight, combine_weights, jacobian, jacobian_matrix
from .wavetrain import WaveTrain, _fourier_diff_matrix


class SpectralError(RuntimeError):
    pass


class NoRoot(SpectralError):
    pass


class PinchingUndetermined(SpectralError):
    pass


class BranchAmbiguity(SpectralError):
    pass


# ---------------------------------------------------------------------------
# linear dispersion relation about the unstable rest state


def dispersion(params: Params, c: float, lam: complex, nu: complex) -> complex:
    """det[D nu^2 + c nu I + F'(0) - lam I], as a literal 2x2 determinant."""
    J = jacobian_matrix(params, 0.0, 0.0)
    m11 = nu * nu + c * nu + J[0, 0] - lam
    m12 = J[0, 1]
    m21 = J[1, 0]
    m22 = c * nu + J[1, 1] - lam
    return m11 * m22 - m12 * m21


def dispersion_grad(params: Params, c: float, lam: complex, nu: complex):
    """(d, d_lambda, d_nu) of the dispersion relation, analytically."""
    J = jacobian_matrix(params, 0.0, 0.0)
    m11 = nu * nu + c * nu + J[0, 0] - lam
    m22 = c * nu + J[1, 1] - lam
    d = m11 * m22 - J[0, 1] * J[1, 0]
    d_lam = -m22 - m11
    d_nu = (2 * nu + c) * m22 + m11 * c
    return d, d_lam, d_nu


def _nu_roots(params: Params, c: float, lam: complex) -> np.ndarray:
    """The three spatial roots nu of d_c(lam, nu) = 0 (cubic in nu)."""
    J = jacobian_matrix(params, 0.0, 0.0)
    A = J[0, 0] - lam
    B = J[1, 1] - lam
    # (nu^2 + c nu + A)(c nu + B) - J12 J21
    coeffs = [c, B + c * c, c * A + c * B, A * B - J[0, 1] * J[1, 0]]
    return np.roots(coeffs)


@dataclass
class DispersionRoot:
    lam: complex
    nu: complex
    c: float
    pinched: bool
    residual_d: float = np.nan
    residual_dnu: float = np.nan


def double_root(params: Params, c: float, seed, tol: float = 1e-12,
                max_iter: int = 60) -> DispersionRoot:
    """Newton-solve d = 0, d_nu = 0 in (lam, nu) from a seed pair.

    The pinched flag is set by tracking the two colliding spatial roots along
    lam = lam* + s for s in [0, 10]: the double root is pinched when they
    separate to opposite sides of Re nu*.
    """
    lam, nu = complex(seed[0]), complex(seed[1])
    h = 1e-7
    for _ in range(max_iter):
        d, d_lam, d_nu = dispersion_grad(params, c, lam, nu)
        # second derivatives of d w.r.t. nu (and mixed), by differentiating
        # the cubic once more analytically
        J = jacobian_matrix(params, 0.0, 0.0)
        m11 = nu * nu + c * nu + J[0, 0] - lam
        m22 = c * nu + J[1, 1] - lam
        d_nunu = 2.0 * m22 + 2.0 * (2 * nu + c) * c
        d_nulam = -(2 * nu + c) - c
        F = np.array([d, d_nu])
        Jm = np.array([[d_lam, d_nu], [d_nulam, d_nunu]])
        try:
            delta = np.linalg.solve(Jm, -F)
        except np.linalg.LinAlgError as exc:
            raise NoRoot("singular Newton system for double root") from exc
        lam += delta[0]
        nu += delta[1]
        if np.max(np.abs(delta)) < tol:
            break
    d, _, d_nu = dispersion_grad(params, c, lam, nu)
    if abs(d) > 1e-10 or abs(d_nu) > 1e-8:
        raise NoRoot(f"double-root Newton did not converge (|d|={abs(d):.2e}, "
                     f"|d_nu|={abs(d_nu):.2e})")
    pinched = _pinched(params, c, lam, nu)
    return DispersionRoot(lam=lam, nu=nu, c=c, pinched=pinched,
                          residual_d=abs(d), residual_dnu=abs(d_nu))


def _pinched(params: Params, c: float, lam_star: complex, nu_star: complex,
             s_max: float = 10.0, n_steps: int = 600) -> bool:
    """Track the colliding roots along lam = lam* + s and test separation.

    All three spatial roots are continued together (optimal permutation
    matching per step, quadratic spacing in s to resolve the sqrt(s)
    splitting near the collision).  Pinched means the colliding pair ends on
    opposite sides of Re nu*.
    """
    from itertools import permutations

    roots = _nu_roots(params, c, lam_star)
    order = np.argsort(np.abs(roots - nu_star))
    labels = list(order[:2])
    if np.abs(roots[labels[0]] - roots[labels[1]]) > 0.5 * max(1.0, np.abs(nu_star)):
        raise PinchingUndetermined("seed roots not close at the double root")
    tracked = roots.copy()
    ss = s_max * (np.arange(1, n_steps + 1) / n_steps) ** 2
    for s in ss:
        roots = _nu_roots(params, c, lam_star + s)
        best = min(permutations(range(3)),
                   key=lambda pm: sum(abs(roots[pm[i]] - tracked[i])
                                      for i in range(3)))
        tracked = np.array([roots[best[i]] for i in range(3)])
    re0, re1 = tracked[labels[0]].real, tracked[labels[1]].real
    if abs(re0 - re1) < 1e-6:
        raise PinchingUndetermined("roots never separate along increasing Re lambda")
    anchor = nu_star.real
    return (re0 - anchor) * (re1 - anchor) < 0


def find_double_roots(params: Params, c: float) -> list[DispersionRoot]:
    """All double roots of the dispersion relation at frame speed c.

    d_c(lam, nu) is cubic in nu with coefficients polynomial in lam, so the
    double roots are the zeros of the cubic's discriminant as a polynomial in
    lam.  Each discriminant zero seeds a Newton polish on (d, d_nu) = 0.
    """
    P = np.polynomial.Polynomial
    J = jacobian_matrix(params, 0.0, 0.0)
    lam = P([0.0, 1.0])
    c3 = P([c])
    c2 = P([J[1, 1] + c * c]) - lam
    c1 = P([c * (J[0, 0] + J[1, 1])]) - 2.0 * c * lam
    c0 = (P([J[0, 0]]) - lam) * (P([J[1, 1]]) - lam) - J[0, 1] * J[1, 0]
    disc = (18.0 * c3 * c2 * c1 * c0 - 4.0 * c2**3 * c0 + c2**2 * c1**2
            - 4.0 * c3 * c1**3 - 27.0 * c3**2 * c0**2)
    lam_candidates = disc.roots()
    found: list[DispersionRoot] = []
    for lam_star in lam_candidates:
        roots = _nu_roots(params, c, lam_star)
        gaps = [abs(roots[0] - roots[1]), abs(roots[0] - roots[2]),
                abs(roots[1] - roots[2])]
        pairs = [(0, 1), (0, 2), (1, 2)]
        i, j = pairs[int(np.argmin(gaps))]
        nu_seed = 0.5 * (roots[i] + roots[j])
        try:
            root = double_root(params, c, (lam_star, nu_seed))
        except (NoRoot, PinchingUndetermined):
            continue
        if not any(abs(root.lam - r.lam) < 1e-8 and abs(root.nu - r.nu) < 1e-8
                   for r in found):
            found.append(root)
    if not found:
        raise NoRoot(f"no double roots found at c={c}")
    return found


def rightmost_pinched_root(params: Params, c: float) -> DispersionRoot:
    roots = [r for r in find_double_roots(params, c) if r.pinched]
    if not roots:
        raise NoRoot(f"no pinched double root at c={c}")
    return max(roots, key=lambda r: r.lam.real)


def linear_spreading_speed(params: Params, c_lo: float = 1e-3,
                           c_hi: float = 5.0, tol: float = 1e-10):
    """Speed c_lin with Re lam*(c) = 0 for the rightmost pinched double root,
    and the decay rate eta_lin = -Re nu* there.  Bisection in c."""

    def re_lam(c):
        return rightmost_pinched_root(params, c).lam.real

    lo, hi = c_lo, c_hi
    f_lo = re_lam(lo)
    f_hi = re_lam(hi)
    if f_lo * f_hi > 0:
        raise NoRoot(f"no sign change of Re lambda* on c in ({c_lo}, {c_hi})")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = re_lam(mid)
        if f_lo * f_mid <= 0:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    c_lin = 0.5 * (lo + hi)
    root = rightmost_pinched_root(params, c_lin)
    return c_lin, -root.nu.real, root


# ---------------------------------------------------------------------------
# Floquet-Bloch spectra of the wave train


def bloch_matrix(params: Params, wt: WaveTrain, nu: complex) -> np.ndarray:
    """Fourier-collocation matrix of D(d+nu)^2 + c(d+nu) + F'(u_wt), 2m x 2m.

    Built on the rescaled period: derivatives come from spectral
    differentiation matrices over sigma in [0,1) divided by powers of L,
    assembled blockwise with the diagonal multiplication by F'(u_wt).
    """
    m = wt.m
    L, c = wt.L, wt.c
    D1 = _fourier_diff_matrix(m, 1) / L
    D2 = _fourier_diff_matrix(m, 2) / L**2
    I = np.eye(m)
    S1 = D1 + nu * I
    S2 = D2 + 2.0 * nu * D1 + (nu * nu) * I
    f_u, f_w, g_u, g_w = jacobian(params, wt.profile_u, wt.profile_w)
    M = np.zeros((2 * m, 2 * m), dtype=complex)
    M[:m, :m] = S2 + c * S1 + np.diag(f_u)
    M[:m, m:] = np.diag(f_w)
    M[m:, :m] = np.diag(g_u)
    M[m:, m:] = c * S1 + np.diag(g_w)
    return M


@dataclass
class BlochSpectrum:
    k_grid: np.ndarray
    eigenvalues: list  # per-k arrays sorted by descending real part
    theta_fit: float = np.nan
    c_g: float = np.nan
    d_eff: float = np.nan
    zero_eigenvalue: complex = np.nan
    simplicity_gap: float = np.nan
    violations: list = field(default_factory=list)
    failed_k: list = field(default_factory=list)

    def max_real_part(self, exclude_zero_mode: bool = True) -> float:
        worst = -np.inf
        for k, lams in zip(self.k_grid, self.eigenvalues):
            re = np.real(lams)
            if exclude_zero_mode and abs(k) < 1e-12:
                re = np.sort(re)[:-1]  # drop the translational zero
            worst = max(worst, float(np.max(re)))
        return worst


def bloch_sweep(params: Params, wt: WaveTrain, n_k: int = 64,
                threads: int | None = None) -> BlochSpectrum:
    """Full eigenvalue clouds of the Bloch matrices over a Floquet grid.

    k runs over a uniform grid in [-k_wt/2, k_wt/2).  theta_fit is the
    largest theta with Re lambda <= -theta k^2 across the sweep (excluding
    the k=0 translational mode).
    """
    k_wt = wt.k_wt
    ks = -k_wt / 2 + k_wt * np.arange(n_k) / n_k
    # ensure k=0 is on the grid (n_k even puts it at index n_k//2)
    ks[np.argmin(np.abs(ks))] = 0.0

    def solve_one(k):
        M = bloch_matrix(params, wt, 1j * k)
        lams = sla.eigvals(M)
        return lams[np.argsort(-lams.real)]

    eigs = [None] * n_k
    failed = []
    if threads and threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as ex:
            futures = {ex.submit(solve_one, k): i for i, k in enumerate(ks)}
            for fut, i in futures.items():
                try:
                    eigs[i] = fut.result()
                except Exception:
                    failed.append(float(ks[i]))
    else:
        for i, k in enumerate(ks):
            try:
                eigs[i] = solve_one(k)
            except Exception:
                failed.append(float(k))

    spec = BlochSpectrum(k_grid=ks, eigenvalues=eigs, failed_k=failed)
    i0 = int(np.argmin(np.abs(ks)))
    lams0 = eigs[i0]
    j0 = int(np.argmin(np.abs(lams0)))
    spec.zero_eigenvalue = complex(lams0[j0])
    others = np.delete(lams0, j0)
    spec.simplicity_gap = float(-np.max(others.real))
    if abs(spec.zero_eigenvalue) > 1e-8:
        spec.violations.append("no eigenvalue within 1e-8 of 0 at k=0")
    if spec.simplicity_gap <= 0:
        spec.violations.append("zero eigenvalue at k=0 is not spectrally isolated")

    # theta: largest value with Re lambda <= -theta k^2 everywhere
    theta = np.inf
    for k, lams in zip(ks, eigs):
        if lams is None:
            continue
        re_max = float(np.max(lams.real)) if abs(k) > 1e-12 else \
            float(np.max(np.delete(lams.real, np.argmin(np.abs(lams)))))
        if abs(k) > 1e-12:
            if re_max >= 0:
                spec.violations.append(f"unstable eigenvalue at k={k:.5g}")
                theta = min(theta, 0.0)
            else:
                theta = min(theta, -re_max / k**2)
    spec.theta_fit = float(theta) if np.isfinite(theta) else np.nan
    return spec


def critical_curve(params: Params, wt: WaveTrain, nu_max: float = 0.04,
                   n_samples: int = 9):
    """Group velocity and effective diffusivity from the critical branch.

    Tracks the eigenvalue branch through 0 by nearest-eigenvalue continuation
    for small real and imaginary nu and fits the expansion of the critical
    branch, lambda(nu) = -c_g nu + D_eff nu^2 + O(nu^3), by least squares on
    a quartic model.  Here c_g is the transport speed of long-wavelength
    phase perturbations in the frame of the wave train's own operator (the
    speed appearing in the advection term of the phase equation); for a
    pattern emitted by a faster front it is negative.
    """
    nus = []
    for direction in (1.0, 1j, -1.0, -1j):
        nus.append(direction * np.linspace(0.0, nu_max, n_samples)[1:])
    branch_nu = [0.0 + 0.0j]
    branch_lam = [0.0 + 0.0j]
    for ray in nus:
        prev = 0.0 + 0.0j
        for nu in ray:
            lams = sla.eigvals(bloch_matrix(params, wt, nu))
            order = np.argsort(np.abs(lams - prev))
            if abs(lams[order[0]] - lams[order[1]]) < 1e-6:
                raise BranchAmbiguity(
                    f"two eigenvalues within 1e-6 of the tracked branch at nu={nu}")
            prev = lams[order[0]]
            branch_nu.append(complex(nu))
            branch_lam.append(complex(prev))
    branch_nu = np.array(branch_nu)
    branch_lam = np.array(branch_lam)
    # least squares on lambda = a1 nu + a2 nu^2 + a3 nu^3 + a4 nu^4
    V = np.column_stack([branch_nu ** p for p in (1, 2, 3, 4)])
    coef, *_ = np.linalg.lstsq(V, branch_lam, rcond=None)
    # modes here are e^{nu xi}, so the branch slope is -c_g
    c_g = -float(np.real(coef[0]))
    d_eff = float(np.real(coef[1]))
    anchor = float(np.abs(branch_lam[0]))
    if d_eff <= 0:
        raise SpectralError(f"fitted effective diffusivity is not positive: {d_eff}")
    return c_g, d_eff, {"nu": branch_nu, "lam": branch_lam, "anchor": anchor,
                        "coef": coef}


def group_velocity_adjoint(params: Params, wt: WaveTrain) -> float:
    """Group velocity from the adjoint kernel at nu = 0.

    First-order perturbation of the Bloch family in e^{nu xi} convention
    gives the branch slope 2 <u_ad,1, u_wt,1''> + c, with u_ad the kernel
    vector of the adjoint operator normalized against the translational
    mode; c_g is minus that slope (same convention as `critical_curve`)."""
    M = bloch_matrix(params, wt, 0.0)
    m = wt.m
    lams, vecs = sla.eig(M.conj().T)
    order = np.argsort(np.abs(lams))
    if abs(lams[order[1]]) < 10 * abs(lams[order[0]]) + 1e-10 and \
       abs(lams[order[1]]) < 1e-6:
        raise SpectralError("adjoint kernel is not numerically one-dimensional")
    u_ad = vecs[:, order[0]]
    du, dw = wt.derivative()
    wt_prime = np.concatenate([du, dw]).astype(complex)
    # spectral (uniform) quadrature over one period: weight L/m per sample
    qw = wt.L / m
    pairing = qw * np.vdot(u_ad, wt_prime)  # <wt', u_ad> = int wt' conj(u_ad)
    u_ad = u_ad / np.conj(pairing)
    ddu = (np.asarray(
        np.real(np.fft.ifft((2j * np.pi * np.fft.fftfreq(m, 1.0 / m)) ** 2
                            * np.fft.fft(wt.profile_u)))) / wt.L**2)
    inner = qw * np.sum(np.conj(u_ad[:m]) * ddu)
    return -(2.0 * float(np.real(inner)) + wt.c)


# ---------------------------------------------------------------------------
# weighted point spectrum of the front


@dataclass
class PointSpectrumReport:
    eta: float
    eta0: float
    grid: Grid
    eigenvalue_nearest_zero: complex
    gap: float
    eigenfunction_u: np.ndarray
    eigenfunction_w: np.ndarray
    adjoint_u: np.ndarray
    adjoint_w: np.ndarray
    ptr_normalization_check: float
    eigenfunction_angle: float
    assumption_violation: str | None = None


def _front_operator_matrix(fp, params: Params, weight, grid: Grid):
    """Sparse FD matrix of the conjugated front linearization, Dirichlet BCs.

    weight is the total conjugation weight W; the operator is
    D(d - phi)^2 + c(d - phi) + F'(u_ps) with phi = (log W)'.
    """
    n, h = grid.n, grid.h
    xi = grid.x
    c = fp.c_ps
    phi = np.asarray(weight.exponent_d1(xi))
    phi_p = np.asarray(weight.exponent_d2(xi))
    e = np.ones(n)
    D1 = sp.diags([-e[1:], e[1:]], [-1, 1], format="csr") / (2 * h)
    D2 = sp.diags([e[1:], -2 * e, e[1:]], [-1, 0, 1], format="csr") / h**2
    Phi = sp.diags(phi)
    A1 = D1 - Phi
    A2 = D2 - 2.0 * Phi @ D1 + sp.diags(phi * phi - phi_p)
    u_ps, w_ps = fp.sample_on(grid)
    f_u, f_w, g_u, g_w = jacobian(params, u_ps, w_ps)
    M = sp.bmat([
        [A2 + c * A1 + sp.diags(f_u), sp.diags(f_w)],
        [sp.diags(g_u), c * A1 + sp.diags(g_w)],
    ], format="csc")
    return M


def front_point_spectrum(fp, params: Params, eta: float, eta0: float,
                         grid: Grid | None = None, n_eigs: int = 8,
                         sigma: complex = 1e-4) -> PointSpectrumReport:
    """Weighted point spectrum of the front linearization near 0.

    Assembles the finite-difference matrix of the doubly conjugated operator
    omega_{eta,0} L_ps (. / omega_{eta,0}) (conjugations carried out
    analytically) and computes the eigenvalues nearest 0 by shift-invert.
    Returns the nearest eigenvalue, its eigenfunction compared against the
    weighted translational mode, the gap to the next eigenvalue, and the
    adjoint eigenfunction normalized so that <omega_0 u_ps', psi_ad> = 1.
    """
    if grid is None:
        grid = Grid(-300.0, 150.0, int(round(450.0 / 0.05)) + 1)
    w_eta = Weight(eta, 0.0)
    w0 = Weight(0.0, eta0)
    W = combine_weights(w_eta, w0)
    M = _front_operator_matrix(fp, params, W, grid)
    lams, vecs = spla.eigs(M, k=n_eigs, sigma=sigma, which="LM")
    order = np.argsort(np.abs(lams))
    lam0 = complex(lams[order[0]])
    others = lams[order[1:]]
    gap = float(-np.max(others.real)) if others.size else np.nan
    n = grid.n
    v = vecs[:, order[0]]
    v = v * np.exp(-1j * np.angle(v[np.argmax(np.abs(v))]))
    vu, vw = np.real(v[:n]), np.real(v[n:])

    # reference: W * u_ps' on the grid
    du, dw = fp.derivative_on(grid)
    Wx = W(grid.x)
    ref = np.concatenate([Wx * du, Wx * dw])
    vv = np.concatenate([vu, vw])
    cosang = abs(np.dot(ref, vv)) / (np.linalg.norm(ref) * np.linalg.norm(vv))
    angle = float(np.arccos(np.clip(cosang, -1.0, 1.0)))

    # adjoint eigenfunction of the assembled matrix; psi_ad = omega_{eta,0} *
    # (adjoint kernel vector), normalized by <omega_0 u_ps', psi_ad> = 1
    lams_a, vecs_a = spla.eigs(M.conj().T.tocsc(), k=n_eigs,
                               sigma=np.conj(sigma), which="LM")
    order_a = np.argsort(np.abs(lams_a - np.conj(lam0)))
    va = vecs_a[:, order_a[0]]
    va = np.real(va * np.exp(-1j * np.angle(va[np.argmax(np.abs(va))])))
    w_eta_x = w_eta(grid.x)
    psi_u = w_eta_x * va[:n]
    psi_w = w_eta_x * va[n:]
    w0_x = w0(grid.x)
    pair = np.trapezoid(w0_x * du * psi_u, dx=grid.h) + \
        np.trapezoid(w0_x * dw * psi_w, dx=grid.h)
    psi_u /= pair
    psi_w /= pair
    check = float(np.trapezoid(w0_x * du * psi_u, dx=grid.h)
                  + np.trapezoid(w0_x * dw * psi_w, dx=grid.h))

    violation = None
    if abs(lam0) > 1e-2:
        violation = f"nearest eigenvalue {lam0:.3e} is farther than 1e-2 from 0"
    return PointSpectrumReport(
        eta=eta, eta0=eta0, grid=grid, eigenvalue_nearest_zero=lam0, gap=gap,
        eigenfunction_u=vu, eigenfunction_w=vw,
        adjoint_u=psi_u, adjoint_w=psi_w,
        ptr_normalization_check=check, eigenfunction_angle=angle,
        assumption_violation=violation)


def ptr(f_u: np.ndarray, f_w: np.ndarray, report: PointSpectrumReport) -> float:
    """The translational-mode functional: <f, psi_ad> by trapezoid rule."""
    grid = report.grid
    if f_u.shape != (grid.n,) or f_w.shape != (grid.n,):
        raise ValueError("fields must be sampled on the report grid")
    return float(np.trapezoid(f_u * report.adjoint_u, dx=grid.h)
                 + np.trapezoid(f_w * report.adjoint_w, dx=grid.h))
