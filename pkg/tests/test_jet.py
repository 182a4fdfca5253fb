import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import polynomial as P

from bilag.expr import eval_jet
from bilag.jet import MAX_ORDER, Jet, SingularJetError, compose, einsum, inv, jet_space

coef = st.floats(-3, 3, allow_nan=False)
pt = st.floats(-1.5, 1.5, allow_nan=False)


def poly_source(c: np.ndarray) -> str:
    """A two-variable polynomial with coefficient grid ``c[i, j]`` for ``x^i y^j``."""
    terms = [f"({float(c[i, j])!r})*x^{i}*y^{j}" for i in range(c.shape[0]) for j in range(c.shape[1])]
    return " + ".join(terms)


@pytest.mark.parametrize("src, point, expected", [
    ("x", 3.0, [3.0, 1.0, 0.0]),
    ("x*x", 2.0, [4.0, 4.0, 1.0]),
])
def test_univariate_coefficients(src, point, expected):
    np.testing.assert_array_equal(eval_jet(src, [point], 2, ["x"]).c, expected)


def test_sine_first_coefficient_matches_central_difference():
    h = 1e-5
    fd = (math.sin(0.7 + h) - math.sin(0.7 - h)) / (2 * h)
    assert abs(eval_jet("sin(x)", [0.7], 2, ["x"]).coefficient((1,)) - fd) <= 1e-7


def test_value_matches_plain_evaluation():
    j = eval_jet("exp(x)*cos(y) - log(1 + x^2)", [0.3, -0.8], 3, ["x", "y"])
    assert abs(j.value - (math.exp(0.3) * math.cos(-0.8) - math.log(1.09))) <= 1e-12


@given(st.lists(coef, min_size=16, max_size=16), pt, pt)
def test_polynomial_partials_match_exact_derivatives(cs, x, y):
    c = np.array(cs).reshape(4, 4)
    j = eval_jet(poly_source(c), [x, y], 3, ["x", "y"])
    for a in range(4):
        for b in range(4 - a):
            d = P.polyder(P.polyder(c, a, axis=0), b, axis=1)
            exact = P.polyval2d(x, y, d) if d.size else 0.0
            assert j.partial((a, b)) == pytest.approx(exact, rel=1e-6, abs=1e-8)


@given(st.lists(coef, min_size=9, max_size=9), pt, pt)
def test_polynomial_gradient_matches_finite_differences(cs, x, y):
    c = np.array(cs).reshape(3, 3)
    src = poly_source(c)
    j = eval_jet(src, [x, y], 2, ["x", "y"])
    h = 1e-5
    f = lambda u, v: P.polyval2d(u, v, c)
    fx = (f(x + h, y) - f(x - h, y)) / (2 * h)
    fy = (f(x, y + h) - f(x, y - h)) / (2 * h)
    np.testing.assert_allclose(j.gradient().value, [fx, fy], rtol=1e-6, atol=1e-7)


@given(pt, pt, st.integers(0, MAX_ORDER))
def test_product_rule_is_exact(x, y, order):
    a = eval_jet("sin(x) + x*y", [x, y], order, ["x", "y"])
    b = eval_jet("exp(y) - x", [x, y], order, ["x", "y"])
    ab = eval_jet("(sin(x) + x*y)*(exp(y) - x)", [x, y], order, ["x", "y"])
    np.testing.assert_allclose((a * b).c, ab.c, rtol=1e-12, atol=1e-12)


def test_product_is_truncated_convolution():
    space = jet_space(1, 3)
    a = Jet(space, np.array([1.0, 2.0, 3.0, 4.0]))
    b = Jet(space, np.array([5.0, 6.0, 7.0, 8.0]))
    np.testing.assert_array_equal((a * b).c, np.convolve(a.c, b.c)[:4])


def test_jet_space_sizes():
    assert jet_space(2, 3).size == math.comb(5, 2)
    assert jet_space(4, 4).size == math.comb(8, 4)


def test_order_above_maximum_is_rejected():
    with pytest.raises(ValueError):
        jet_space(2, MAX_ORDER + 1)


def test_deriv_lowers_order():
    j = eval_jet("x^3*y", [1.0, 2.0], 3, ["x", "y"])
    d = j.deriv(0)
    assert d.order == 2
    assert d.value == pytest.approx(6.0)
    assert d.partial((1, 0)) == pytest.approx(12.0)


def test_einsum_matches_plain_matrix_product_on_values():
    space = jet_space(2, 2)
    rng = np.random.default_rng(0)
    a = Jet(space, rng.normal(size=(3, 2, 2, space.size)))
    b = Jet(space, rng.normal(size=(3, 2, 2, space.size)))
    out = einsum("...ij,...jk->...ik", a, b)
    np.testing.assert_allclose(out.value, a.value @ b.value)


def test_matrix_inverse_jet_is_identity_inverse():
    space = jet_space(2, 3)
    xs = Jet.variables(space, np.array([0.4, -0.2]))
    x, y = xs[..., 0], xs[..., 1]
    one = Jet.constant(space, 1.0)
    m = Jet.stack([Jet.stack([one + x * x, y], axis=-1), Jet.stack([x * y, 2.0 + y.exp()], axis=-1)], axis=-2)
    prod = einsum("...ij,...jk->...ik", m, inv(m))
    eye = np.zeros_like(prod.c)
    eye[..., 0, 0, 0] = eye[..., 1, 1, 0] = 1.0
    np.testing.assert_allclose(prod.c, eye, atol=1e-12)


def test_singular_matrix_raises():
    space = jet_space(1, 1)
    with pytest.raises(SingularJetError):
        inv(Jet.constant(space, np.ones((2, 2))))


@given(st.floats(-1, 1), st.floats(-1, 1))
def test_composition_is_chain_rule(x, y):
    # outer g(u, v) = sin(u) * v expanded at inner(x, y) = (x*y, x + y)
    inner = eval_jet("x*y", [x, y], 3, ["x", "y"]), eval_jet("x + y", [x, y], 3, ["x", "y"])
    inner = Jet.stack(list(inner), axis=-1)
    outer = eval_jet("sin(u)*v", inner.value, 3, ["u", "v"])
    direct = eval_jet("sin(x*y)*(x + y)", [x, y], 3, ["x", "y"])
    np.testing.assert_allclose(compose(outer, inner).c, direct.c, atol=1e-12)
