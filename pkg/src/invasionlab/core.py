"""Model definitions, grids, exponential weights, cutoffs, and norms.

The model is the two-component FitzHugh-Nagumo system

    u_t = u_xx + u(u+a)(1-u-a) - w,
    w_t = eps (u - gamma w),

with diffusion matrix D = diag(1, 0).  Everything downstream (time stepping,
wave-train solves, spectral computations) is built on the small set of pure
functions defined here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Params:
    """Model parameters (a, gamma, eps) plus an optional frame speed c."""

    a: float
    gamma: float
    eps: float
    c: float | None = None

    def __post_init__(self):
        if not (0.0 < self.a < 1.0 / 3.0):
            raise ValueError(f"need 0 < a < 1/3, got a={self.a}")
        if not (0.0 < self.gamma < 4.0):
            raise ValueError(f"need 0 < gamma < 4, got gamma={self.gamma}")
        if not self.eps > 0.0:
            raise ValueError(f"need eps > 0, got eps={self.eps}")


@dataclass(frozen=True)
class Grid:
    """Uniform 1-D grid on [x_min, x_max] with n points, spacing h."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("grid needs at least 3 points")
        if not self.x_max > self.x_min:
            raise ValueError("need x_max > x_min")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(self.n)


@dataclass(frozen=True)
class State:
    """Sampled (u, w) fields on a grid at time t."""

    grid: Grid
    t: float
    u: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        if self.u.shape != (self.grid.n,) or self.w.shape != (self.grid.n,):
            raise ValueError("field shapes must match the grid")

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.w)))


def reaction(params: Params, u, w):
    """Reaction terms (u(u+a)(1-u-a) - w, eps(u - gamma w)). Vectorized."""
    a = params.a
    return u * (u + a) * (1.0 - u - a) - w, params.eps * (u - params.gamma * w)


def jacobian(params: Params, u, w):
    """Partial derivatives of the reaction with respect to (u, w).

    Returns entries (f_u, f_w, g_u, g_w); each broadcasts with the input.
    At (0,0) this is [[a(1-a), -1], [eps, -eps*gamma]].
    """
    a = params.a
    f_u = -3.0 * u * u + 2.0 * (1.0 - 2.0 * a) * u + a * (1.0 - a)
    f_w = -1.0 * np.ones_like(np.asarray(u, dtype=float))
    g_u = params.eps * np.ones_like(np.asarray(u, dtype=float))
    g_w = -params.eps * params.gamma * np.ones_like(np.asarray(u, dtype=float))
    return f_u, f_w, g_u, g_w


def jacobian_matrix(params: Params, u: float, w: float) -> np.ndarray:
    f_u, f_w, g_u, g_w = jacobian(params, u, w)
    return np.array([[float(f_u), float(f_w)], [float(g_u), float(g_w)]])


def _quintic_blend_coeffs(eta_minus: float, eta_plus: float) -> np.ndarray:
    """Degree-5 polynomial on [-1,1] matching value, slope, curvature of
    eta_minus*xi at xi=-1 and eta_plus*xi at xi=+1."""
    # rows: p(-1), p'(-1), p''(-1), p(1), p'(1), p''(1) in the monomial basis
    A = np.zeros((6, 6))
    for j in range(6):
        A[0, j] = (-1.0) ** j
        A[1, j] = j * (-1.0) ** (j - 1) if j >= 1 else 0.0
        A[2, j] = j * (j - 1) * (-1.0) ** (j - 2) if j >= 2 else 0.0
        A[3, j] = 1.0
        A[4, j] = j
        A[5, j] = j * (j - 1)
    b = np.array([-eta_minus, eta_minus, 0.0, eta_plus, eta_plus, 0.0])
    return np.linalg.solve(A, b)


@dataclass(frozen=True)
class Weight:
    """Smooth positive two-sided exponential weight.

    Equals exp(eta_minus*xi) for xi <= -1 and exp(eta_plus*xi) for xi >= 1.
    On [-1, 1] the exponent is a quintic Hermite blend of the two linear
    exponents (value, first and second derivative matched at the endpoints),
    which makes the weight smooth and bit-reproducible.  For equal rates the
    blend collapses to the exact exponential everywhere.
    """

    eta_minus: float
    eta_plus: float
    _coeffs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(
            self, "_coeffs", _quintic_blend_coeffs(self.eta_minus, self.eta_plus)
        )

    def exponent(self, xi):
        """log of the weight, elementwise."""
        xi = np.asarray(xi, dtype=float)
        g = np.where(xi <= -1.0, self.eta_minus * xi, self.eta_plus * xi)
        mid = np.abs(xi) < 1.0
        if np.any(mid):
            g = np.array(g, dtype=float)
            g[mid] = np.polynomial.polynomial.polyval(xi[mid], self._coeffs)
        return g if g.shape else float(g)

    def exponent_d1(self, xi):
        """First derivative of the exponent (the weight's log-derivative)."""
        xi = np.asarray(xi, dtype=float)
        g = np.where(xi <= -1.0, self.eta_minus, self.eta_plus)
        mid = np.abs(xi) < 1.0
        if np.any(mid):
            g = np.array(g, dtype=float)
            d1 = np.polynomial.polynomial.polyder(self._coeffs)
            g[mid] = np.polynomial.polynomial.polyval(xi[mid], d1)
        return g if g.shape else float(g)

    def exponent_d2(self, xi):
        """Second derivative of the exponent."""
        xi = np.asarray(xi, dtype=float)
        g = np.zeros_like(xi)
        mid = np.abs(xi) < 1.0
        if np.any(mid):
            d2 = np.polynomial.polynomial.polyder(self._coeffs, 2)
            g[mid] = np.polynomial.polynomial.polyval(xi[mid], d2)
        return g if g.shape else float(g)

    def __call__(self, xi):
        return np.exp(self.exponent(xi))


def weight_eval(w: Weight, xi):
    """Evaluate the weight at xi (scalar or array)."""
    return w(xi)


def combine_weights(w1: Weight, w2: Weight) -> "_ProductWeight":
    """Pointwise product of two weights, with analytic log-derivatives."""
    return _ProductWeight(w1, w2)


class _ProductWeight:
    """Product of weights; exposes the same exponent interface as Weight."""

    def __init__(self, *weights: Weight):
        self.weights = weights

    def exponent(self, xi):
        return sum(w.exponent(xi) for w in self.weights)

    def exponent_d1(self, xi):
        return sum(w.exponent_d1(xi) for w in self.weights)

    def exponent_d2(self, xi):
        return sum(w.exponent_d2(xi) for w in self.weights)

    def __call__(self, xi):
        return np.exp(self.exponent(xi))


def _smoothstep5(s):
    """Order-2 smoothstep 6s^5 - 15s^4 + 10s^3, clamped to [0, 1]."""
    s = np.clip(s, 0.0, 1.0)
    return s * s * s * (s * (6.0 * s - 15.0) + 10.0)


def chi_minus(xi):
    """Smooth cutoff: 1 for xi <= -1, 0 for xi >= 0, monotone in between."""
    xi = np.asarray(xi, dtype=float)
    out = _smoothstep5(-xi)
    return out if out.shape else float(out)


def chi_plus(xi):
    """Complement cutoff: chi_plus = 1 - chi_minus."""
    return 1.0 - chi_minus(xi)


def weighted_norm(values: np.ndarray, grid: Grid, weight, kind: str = "sup") -> float:
    """Weighted sup or L2 norm of a sampled field.

    sup: max of weight*|values|; L2: trapezoid integral of (weight*values)^2,
    square-rooted.  `weight` is a Weight (or product) or None for the
    unweighted norm.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n,):
        raise ValueError("values must match the grid")
    wv = values if weight is None else weight(grid.x) * values
    if kind == "sup":
        return float(np.max(np.abs(wv)))
    if kind == "L2":
        return float(np.sqrt(np.trapezoid(wv * wv, dx=grid.h)))
    raise ValueError(f"unknown norm kind {kind!r}")
