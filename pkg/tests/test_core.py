"""Unit tests for the model definitions, weights, cutoffs, and norms."""

import numpy as np
import pytest

from invasionlab.core import Grid, Params, State, Weight, chi_minus, \
    chi_plus, combine_weights, jacobian, reaction, weight_eval, weighted_norm


def test_params_validation():
    with pytest.raises(ValueError):
        Params(0.5, 2.0, 0.01)       # a out of (0, 1/3)
    with pytest.raises(ValueError):
        Params(0.1, 5.0, 0.01)       # gamma out of (0, 4)
    with pytest.raises(ValueError):
        Params(0.1, 2.0, -1.0)       # eps <= 0


def test_reaction_at_rest_state_is_zero():
    p = Params(0.1, 2.0, 0.01)
    fu, fw = reaction(p, 0.0, 0.0)
    assert fu == 0.0 and fw == 0.0


def test_jacobian_at_origin_closed_form():
    p = Params(0.1, 2.0, 0.01)
    f_u, f_w, g_u, g_w = jacobian(p, 0.0, 0.0)
    assert np.isclose(float(f_u), p.a * (1 - p.a))
    assert float(f_w) == -1.0
    assert float(g_u) == p.eps
    assert np.isclose(float(g_w), -p.eps * p.gamma)


def test_weight_is_pure_exponential_outside_bridge():
    w = Weight(0.3, -0.2)
    for xi in (-5.0, -1.0, 1.0, 7.5):
        expected = np.exp(0.3 * xi) if xi <= -1 else np.exp(-0.2 * xi)
        assert np.isclose(weight_eval(w, xi), expected, rtol=1e-14)


def test_weight_equal_rates_collapse_to_exact_exponential():
    w = Weight(0.4, 0.4)
    xi = np.linspace(-3, 3, 101)
    assert np.allclose(w(xi), np.exp(0.4 * xi), rtol=1e-12)


def test_weight_bridge_is_smooth():
    w = Weight(0.5, -0.1)
    xi = np.linspace(-1.5, 1.5, 3001)
    g = w.exponent(xi)
    # finite-difference second derivative stays bounded through +-1
    d2 = np.diff(g, 2) / (xi[1] - xi[0]) ** 2
    assert np.max(np.abs(d2)) < 10.0
    # first derivative matches exponent_d1
    d1_fd = np.gradient(g, xi)
    d1 = w.exponent_d1(xi)
    assert np.max(np.abs(d1 - d1_fd)[5:-5]) < 1e-3


def test_weight_ratio_bound():
    w = Weight(0.3, 0.7)
    eta = 0.7
    rng = np.random.Generator(np.random.Philox(1))
    xi = rng.uniform(-10, 10, 200)
    y = rng.uniform(-5, 5, 200)
    ratio = w(xi) / w(xi + y)
    assert np.all(ratio <= 4.0 * np.exp(eta * np.abs(y)))


def test_product_weight_exponents_add():
    w1, w2 = Weight(0.2, 0.0), Weight(0.0, 0.4)
    prod = combine_weights(w1, w2)
    xi = np.linspace(-4, 4, 41)
    assert np.allclose(prod(xi), w1(xi) * w2(xi))
    assert np.allclose(prod.exponent_d1(xi),
                       np.asarray(w1.exponent_d1(xi))
                       + np.asarray(w2.exponent_d1(xi)))


def test_cutoffs_partition_of_unity_and_monotone():
    xi = np.linspace(-3, 3, 601)
    assert np.allclose(chi_minus(xi) + chi_plus(xi), 1.0)
    assert np.all(np.diff(chi_minus(xi)) <= 1e-15)
    assert chi_minus(-1.0) == 1.0 and chi_minus(0.0) == 0.0


def test_weighted_norm_examples():
    grid = Grid(-10.0, 10.0, 2001)
    zero = np.zeros(grid.n)
    assert weighted_norm(zero, grid, None, "sup") == 0.0
    ones = np.ones(grid.n)
    w_unit = Weight(0.0, 0.0)
    assert weighted_norm(ones, grid, w_unit, "sup") == 1.0
    gauss = np.exp(-grid.x ** 2)
    # integral of e^{-2x^2} = sqrt(pi/2); L2 norm = (pi/2)^{1/4}
    val = weighted_norm(gauss, grid, w_unit, "L2")
    assert abs(val - (np.pi / 2.0) ** 0.25) < 1e-4


def test_state_shape_validation():
    grid = Grid(0.0, 1.0, 11)
    with pytest.raises(ValueError):
        State(grid, 0.0, np.zeros(10), np.zeros(11))
