import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import polynomial_lists, polynomials
from bilag.geom import (Chart, ChartMismatchError, Connection, InverseMismatchError, Map, OneForm, ScalarField,
                        TwoForm, VectorField, bracket, check_inverse, covariant_derivative_tensor, curvature,
                        curvature_tensor, exterior_derivative, lie_bracket, pullback, pushforward_vf, torsion,
                        torsion_tensor)

PLANE = Chart("plane", ("x", "y"))
SPACE = Chart("space", ("x", "y", "z"))
points2 = st.tuples(st.floats(-1, 1), st.floats(-1, 1)).map(list)
points3 = st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)).map(list)


def vf(chart, comps):
    return VectorField.from_exprs(chart, comps)


def test_chart_rejects_duplicate_names():
    with pytest.raises(ValueError):
        Chart("bad", ("x", "x"))


def test_chart_samples_are_deterministic_and_inside_box():
    c = Chart("c", ("a", "b"), ((0.0, 1.0), (2.0, 5.0)))
    s = c.samples(50, seed=3)
    np.testing.assert_array_equal(s, c.samples(50, seed=3))
    assert np.all((s[:, 0] >= 0) & (s[:, 0] <= 1) & (s[:, 1] >= 2) & (s[:, 1] <= 5))


@given(points2)
def test_coordinate_fields_commute(p):
    assert np.all(lie_bracket(VectorField.coordinate(PLANE, "x"), VectorField.coordinate(PLANE, "y"), p) == 0)


@given(points2)
def test_bracket_of_x_dy_with_dx(p):
    np.testing.assert_allclose(lie_bracket(vf(PLANE, ["0", "x"]), VectorField.coordinate(PLANE, "x"), p), [0, -1])


def test_bracket_matches_flow_commutator():
    # second-order flow commutator phi_-Y phi_-X phi_Y phi_X (p) ~ p + t^2 [X, Y]
    def flow_x(p, t):
        return np.array([p[0] + t, p[1] + p[0] * 0])

    def flow_xdy(p, t):  # x d/dy
        return np.array([p[0], p[1] + t * p[0]])

    p = np.array([0.4, -0.3])
    t = 1e-4
    q = flow_x(flow_xdy(flow_x(flow_xdy(p, t), t), -t), -t)
    fd = (q - p) / t ** 2
    np.testing.assert_allclose(fd, lie_bracket(vf(PLANE, ["0", "x"]), VectorField.coordinate(PLANE, "x"), p),
                               atol=1e-6)


@given(polynomial_lists(("x", "y"), 2), polynomial_lists(("x", "y"), 2), points2)
def test_bracket_is_bilinear_and_antisymmetric(a, b, p):
    X, Y = vf(PLANE, a), vf(PLANE, b)
    xy = lie_bracket(X, Y, p)
    np.testing.assert_allclose(lie_bracket(2 * X, Y, p), 2 * xy, atol=1e-10)
    np.testing.assert_allclose(lie_bracket(Y, X, p), -xy, atol=1e-10)


@given(polynomial_lists(("x", "y", "z"), 3), polynomial_lists(("x", "y", "z"), 3),
       polynomial_lists(("x", "y", "z"), 3), points3)
def test_jacobi_identity(a, b, c, p):
    X, Y, Z = vf(SPACE, a), vf(SPACE, b), vf(SPACE, c)
    total = bracket(X, bracket(Y, Z)) + bracket(Y, bracket(Z, X)) + bracket(Z, bracket(X, Y))
    assert np.max(np.abs(total.jet(p).value)) <= 1e-8


def test_bracket_across_charts_raises():
    with pytest.raises(ChartMismatchError):
        lie_bracket(VectorField.coordinate(PLANE, "x"), VectorField.coordinate(SPACE, "x"), [0, 0])


@given(points2)
def test_exterior_derivative_of_x_dy(p):
    d = exterior_derivative(OneForm.from_exprs(PLANE, ["0", "x"]))
    np.testing.assert_allclose(d.matrix(p), [[[0, 1], [-1, 0]]])


@given(polynomials(("x", "y", "z"), 3))
def test_d_squared_vanishes(src):
    f = ScalarField.from_expr(SPACE, src)
    pts = SPACE.samples(20)
    assert np.max(np.abs(exterior_derivative(f.differential()).components(pts))) <= 1e-10


def test_d_of_df_for_xy_vanishes():
    f = ScalarField.from_expr(PLANE, "x*y")
    assert np.max(np.abs(exterior_derivative(f.differential()).components(PLANE.samples(20)))) <= 1e-10


def test_exterior_derivative_of_liouville_form():
    bundle = Chart("T*R", ("x", "xi"))
    theta = OneForm.from_exprs(bundle, ["xi", "0"])
    np.testing.assert_allclose(exterior_derivative(theta).matrix(bundle.samples(5)),
                               np.broadcast_to([[0, -1], [1, 0]], (5, 2, 2)))


def test_two_form_closedness_in_three_dimensions():
    w = TwoForm.from_exprs(SPACE, {("x", "y"): "z", ("y", "z"): "x"})
    dw = exterior_derivative(w).components(SPACE.samples(5))
    assert np.allclose(np.abs(dw[:, 0, 1, 2]), 2.0)


@given(points2)
def test_flat_connection_has_no_torsion_or_curvature(p):
    conn = Connection.flat(PLANE)
    dx, dy = VectorField.coordinate(PLANE, "x"), VectorField.coordinate(PLANE, "y")
    assert np.all(torsion(conn, dx, dy, p) == 0)
    assert np.all(curvature(conn, dx, dy, dx, p) == 0)


def test_torsion_direct_formula():
    conn = Connection.from_exprs(PLANE, {(0, 0, 1): "1"})
    dx, dy = VectorField.coordinate(PLANE, "x"), VectorField.coordinate(PLANE, "y")
    np.testing.assert_allclose(torsion(conn, dx, dy, [0.2, 0.7]), [1, 0])
    np.testing.assert_allclose(torsion_tensor(conn, [[0.2, 0.7]])[0, 0], [[0, 1], [-1, 0]])


connections = st.lists(st.sampled_from(["x", "y", "x*y", "1", "x^2 - y", "0"]), min_size=8, max_size=8)


def _conn(entries):
    keys = [(k, i, j) for k in range(2) for i in range(2) for j in range(2)]
    return Connection.from_exprs(PLANE, dict(zip(keys, entries)))


@given(connections, polynomial_lists(("x", "y"), 2), polynomial_lists(("x", "y"), 2), points2)
def test_torsion_is_antisymmetric(entries, a, b, p):
    conn, X, Y = _conn(entries), vf(PLANE, a), vf(PLANE, b)
    np.testing.assert_allclose(torsion(conn, X, Y, p), -torsion(conn, Y, X, p), atol=1e-10)


@given(connections, polynomial_lists(("x", "y"), 2), polynomial_lists(("x", "y"), 2),
       polynomial_lists(("x", "y"), 2), points2)
def test_curvature_is_antisymmetric(entries, a, b, c, p):
    conn, X, Y, Z = _conn(entries), vf(PLANE, a), vf(PLANE, b), vf(PLANE, c)
    np.testing.assert_allclose(curvature(conn, X, Y, Z, p), -curvature(conn, Y, X, Z, p), atol=1e-9)


@given(connections, polynomial_lists(("x", "y"), 2), polynomial_lists(("x", "y"), 2),
       polynomial_lists(("x", "y"), 2), polynomials(("x", "y")), points2)
def test_torsion_and_curvature_are_tensorial(entries, a, b, c, fsrc, p):
    conn, X, Y, Z = _conn(entries), vf(PLANE, a), vf(PLANE, b), vf(PLANE, c)
    f = ScalarField.from_expr(PLANE, fsrc)
    fp = f(p)[0]
    np.testing.assert_allclose(torsion(conn, f * X, Y, p), fp * torsion(conn, X, Y, p), atol=1e-8)
    r = curvature(conn, X, Y, Z, p)
    np.testing.assert_allclose(curvature(conn, f * X, Y, Z, p), fp * r, atol=1e-8)
    np.testing.assert_allclose(curvature(conn, X, Y, f * Z, p), fp * r, atol=1e-8)


SPHERE = Chart("sphere", ("th", "ph"), ((0.3, 2.8), (-1.0, 1.0)))


def _sphere_gamma(th):
    g = np.zeros((2, 2, 2))
    g[0, 1, 1] = -np.sin(th) * np.cos(th)
    g[1, 0, 1] = g[1, 1, 0] = np.cos(th) / np.sin(th)
    return g


def test_sphere_curvature_matches_coordinate_formula():
    conn = Connection.from_exprs(SPHERE, {(0, 1, 1): "-sin(th)*cos(th)", (1, 0, 1): "cos(th)/sin(th)",
                                          (1, 1, 0): "cos(th)/sin(th)"})
    pts = SPHERE.samples(10)
    R = curvature_tensor(conn, pts)
    h = 1e-5
    for p, r in zip(pts, R):
        g = _sphere_gamma(p[0])
        dg = np.zeros((2, 2, 2, 2))  # dg[i] = d_i Gamma
        dg[0] = (_sphere_gamma(p[0] + h) - _sphere_gamma(p[0] - h)) / (2 * h)
        oracle = np.zeros((2, 2, 2, 2))
        for l in range(2):
            for k in range(2):
                for i in range(2):
                    for j in range(2):
                        oracle[l, k, i, j] = (dg[i, l, j, k] - dg[j, l, i, k]
                                              + g[l, i] @ g[:, j, k] - g[l, j] @ g[:, i, k])
        np.testing.assert_allclose(r, oracle, atol=1e-8)
        assert r[0, 1, 0, 1] == pytest.approx(np.sin(p[0]) ** 2, abs=1e-10)
    dth, dph = VectorField.coordinate(SPHERE, "th"), VectorField.coordinate(SPHERE, "ph")
    np.testing.assert_allclose(curvature(conn, dth, dph, dph, pts), R[:, :, 1, 0, 1], atol=1e-12)


def test_covariant_derivative_of_constant_form_under_flat_connection():
    w = TwoForm.constant(PLANE, [[0, 1], [-1, 0]])
    assert np.all(covariant_derivative_tensor(Connection.flat(PLANE), w).components(PLANE.samples(5)) == 0)


def _map(src, dst, comps):
    return Map.from_exprs(src, dst, comps)


def test_pushforward_by_identity_is_identity():
    X = vf(PLANE, ["x*y", "sin(x)"])
    ident = Map.identity(PLANE)
    pts = PLANE.samples(10)
    np.testing.assert_allclose(pushforward_vf(ident, ident, X, pts), X(pts))


def test_pushforward_by_translation_shifts_the_base_point():
    X = vf(PLANE, ["x*y", "sin(x)"])
    phi = _map(PLANE, PLANE, ["x + 0.5", "y - 0.25"])
    phi_inv = _map(PLANE, PLANE, ["x - 0.5", "y + 0.25"])
    pts = PLANE.samples(10)
    np.testing.assert_allclose(pushforward_vf(phi, phi_inv, X, pts), X(pts - [0.5, -0.25]), atol=1e-14)


def test_pushforward_by_scaling_doubles_dx():
    phi = _map(PLANE, PLANE, ["2*x", "y"])
    phi_inv = _map(PLANE, PLANE, ["x/2", "y"])
    np.testing.assert_allclose(pushforward_vf(phi, phi_inv, VectorField.coordinate(PLANE, "x"), [0.3, 0.1]), [2, 0])


def test_pushforward_rejects_a_wrong_inverse():
    phi = _map(PLANE, PLANE, ["2*x", "y"])
    with pytest.raises(InverseMismatchError):
        pushforward_vf(phi, phi, VectorField.coordinate(PLANE, "x"), PLANE.samples(5))


def test_check_inverse_reports_error_size():
    phi = _map(PLANE, PLANE, ["x + y^3", "y"])
    phi_inv = _map(PLANE, PLANE, ["x - y^3", "y"])
    assert check_inverse(phi, phi_inv, PLANE.samples(30)) <= 1e-14


def test_pullback_of_area_form_scales_by_jacobian():
    w = TwoForm.constant(PLANE, [[0, 1], [-1, 0]])
    psi = _map(PLANE, PLANE, ["2*x + y^2", "y"])
    np.testing.assert_allclose(pullback(psi, w).matrix(PLANE.samples(4))[:, 0, 1], 2.0)
