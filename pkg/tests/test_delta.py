import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tsfrac.delta import (
    GridFunction,
    QuadraturePolicy,
    cumulative_integral,
    delta_derivative,
    delta_integral,
    derivative_matrix,
    lp_norm,
    quadrature_weights,
    shift_sigma,
    sup_norm,
)
from tsfrac.errors import BadExponentError, NotANodeError
from tsfrac.timescale import build_mesh, build_time_scale, preset
from tsfrac.verification import random_mesh

LEFT, TRAP = QuadraturePolicy.LEFT_RECTANGLE, QuadraturePolicy.TRAPEZOID


def test_constant_on_interval_plus_point():
    m = build_mesh(build_time_scale([(0, 1), (2, 2)]), 0.1)
    assert math.isclose(delta_integral(GridFunction.constant(m, 2.0)), 4.0, rel_tol=1e-14)


def test_scattered_sum():
    m = build_mesh(preset("integer-4"), 1.0)
    f = GridFunction.sample(m, lambda t: t**2)
    assert delta_integral(f, 0, 3) == 5.0
    np.testing.assert_array_equal(delta_derivative(f).values[:3], [1, 3, 5])
    assert delta_integral(f, 2, 2) == 0.0


def test_trapezoid_exact_on_linear():
    m = build_mesh(preset("unit-interval"), 0.25)
    assert delta_integral(GridFunction.sample(m, lambda t: t), policy=TRAP) == 0.5


def test_endpoints_must_be_nodes():
    m = build_mesh(preset("unit-interval"), 0.25)
    with pytest.raises(NotANodeError):
        delta_integral(GridFunction.constant(m, 1.0), 0.1, 1.0)


def test_derivative_examples():
    m = build_mesh(preset("unit-interval"), 1e-3)
    d = delta_derivative(GridFunction.sample(m, lambda t: t**2))
    assert d.extrapolated
    assert np.max(np.abs(d.values[:-1] - 2 * m.nodes[:-1])) <= 1.001e-3
    assert np.all(delta_derivative(GridFunction.constant(m, 4.2)).values == 0)
    small = build_mesh(preset("unit-interval"), 0.25)
    np.testing.assert_allclose(derivative_matrix(small) @ small.nodes**2, [0.25, 0.75, 1.25, 1.75, 1.75])


def test_norms():
    m = build_mesh(preset("unit-interval"), 1e-3)
    assert math.isclose(lp_norm(GridFunction.constant(m, 3.0), 2), 3.0, rel_tol=1e-12)
    assert abs(lp_norm(GridFunction.sample(m, lambda t: t), 2) - 1 / math.sqrt(3)) <= 1e-6
    assert sup_norm(GridFunction.sample(m, lambda t: t - 0.5)) == 0.5
    m4 = build_mesh(preset("integer-4"), 1.0)
    assert lp_norm(GridFunction.constant(m4, 1.0), 1) == 3.0
    assert math.isclose(sup_norm(GridFunction.sample(m4, np.sin)), math.sin(2))
    with pytest.raises(BadExponentError):
        lp_norm(GridFunction.constant(m4, 1.0), 0.5)


def test_grid_function_validation():
    m = build_mesh(preset("integer-4"), 1.0)
    with pytest.raises(ValueError):
        GridFunction(m, [1.0, 2.0])
    with pytest.raises(ValueError):
        GridFunction(m, [1.0, np.nan, 0.0, 0.0])
    f = GridFunction(m, [1.0, 2.0, 3.0, 4.0])
    np.testing.assert_array_equal((2 * f - f + 1).values, [2, 3, 4, 5])


def test_shift_sigma_mixed():
    m = build_mesh(preset("mixed"), 0.5)
    f = GridFunction(m, np.arange(m.n, dtype=float))
    # scattered cells 0->1 and 2->3 take the successor value; dense nodes keep their own
    np.testing.assert_array_equal(shift_sigma(f).values, [1, 1, 2, 4, 4])


def test_cumulative_matches_left_rule():
    m = build_mesh(preset("mixed"), 0.25)
    f = GridFunction.sample(m, np.cos)
    c = cumulative_integral(f)
    for t, v in zip(m.nodes, c.values):
        assert math.isclose(v, delta_integral(f, m.a, t, LEFT), rel_tol=1e-13, abs_tol=1e-15)


@given(st.integers(0, 2**32 - 1))
def test_linearity(seed):
    rng = np.random.default_rng(seed)
    m = random_mesh(rng)
    f, g = GridFunction(m, rng.normal(size=m.n)), GridFunction(m, rng.normal(size=m.n))
    a, b = rng.normal(size=2)
    for pol in (LEFT, TRAP):
        lhs = delta_integral(a * f + b * g, policy=pol)
        rhs = a * delta_integral(f, policy=pol) + b * delta_integral(g, policy=pol)
        assert abs(lhs - rhs) <= 1e-12 * (1 + delta_integral(abs(a * f) + abs(b * g), policy=pol))
    np.testing.assert_allclose(
        delta_derivative(a * f + b * g).values,
        a * delta_derivative(f).values + b * delta_derivative(g).values,
        rtol=1e-10,
        atol=1e-10 * np.max(np.abs(delta_derivative(abs(f) + abs(g)).values)),
    )


@given(st.integers(0, 2**32 - 1))
def test_weights_reproduce_piecewise_integral(seed):
    rng = np.random.default_rng(seed)
    m = random_mesh(rng)
    f = GridFunction(m, rng.normal(size=m.n))
    v = f.values
    expected = 0.0
    for i in range(m.n - 1):
        if m.scattered[i]:
            expected += m.mu[i] * v[i]
        else:
            expected += m.mu[i] * 0.5 * (v[i] + v[i + 1])
    assert math.isclose(quadrature_weights(m, TRAP) @ v, expected, rel_tol=1e-12, abs_tol=1e-12)


def test_ibp_dense_first_order():
    errs = []
    for k in (64, 128, 256, 512):
        m = build_mesh(preset("unit-interval"), 1 / k)
        f, g = GridFunction.sample(m, np.sin), GridFunction.sample(m, np.exp)
        w = quadrature_weights(m, LEFT)
        lhs = w @ (shift_sigma(f).values * delta_derivative(g).values)
        rhs = f.values[-1] * g.values[-1] - f.values[0] * g.values[0] - w @ (delta_derivative(f).values * g.values)
        errs.append(abs(lhs - rhs))
    ratios = [errs[i] / errs[i + 1] for i in range(3)]
    assert all(1.6 <= r <= 2.4 for r in ratios), ratios


def test_ibp_mixed_scattered_cells_exact_with_mesh_successor():
    rng = np.random.default_rng(0)
    m = build_mesh(preset("integer-4"), 1.0)
    w = quadrature_weights(m, LEFT)
    for _ in range(50):
        f, g = GridFunction(m, rng.normal(size=m.n)), GridFunction(m, rng.normal(size=m.n))
        lhs = w @ (shift_sigma(f).values * delta_derivative(g).values)
        rhs = f.values[-1] * g.values[-1] - f.values[0] * g.values[0] - w @ (delta_derivative(f).values * g.values)
        assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs))
