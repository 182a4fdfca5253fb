import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bilag.geom import InverseMismatchError
from bilag.torus import (CapturedError, PeriodicityError, TorusDiffeo, TorusVectorField, cherry_field,
                         find_singularities, flow, flow_batch, linear_field, pushforward_torus_field, torus_grid,
                         validate_cherry)
from bilag.torus import integrate as integ

# independent oracle: sympy root finding on the closed-form field
SINK = (0.5150222958461135, 0.43772333464891794)
SINK_EIGS = (-16.51190166, -14.63898691)
SADDLE = (0.5150222958461135, 0.5622766653510821)
SADDLE_EIGS = (-19.35785467, 12.48679238)

SINE = TorusVectorField.from_exprs("sin(2*pi*x)", "sin(2*pi*y)", "sines")


def test_integrator_status_codes_are_distinct():
    assert len({integ.REACHED, integ.CAPTURED, integ.TMAX, integ.UNDERFLOW}) == 4


@given(st.floats(0, 1, exclude_max=True))
def test_vertical_flow_reaches_section_in_unit_time(x):
    X = TorusVectorField.from_exprs("0", "1")
    p, t = flow(X, [x, 0.0], until=1.0)
    assert p[0] == pytest.approx(x, abs=1e-12)
    assert t == pytest.approx(1.0, abs=1e-10)


@given(st.floats(0, 1, exclude_max=True))
def test_linear_flow_rotates_by_alpha(x):
    p, t = flow(linear_field(0.3), [x, 0.0], until=1.0)
    assert abs((p[0] - (x + 0.3) + 0.5) % 1.0 - 0.5) <= 1e-10
    assert t == pytest.approx(1.0, abs=1e-10)


def test_fixed_time_flow_of_linear_field():
    res = flow_batch(linear_field(0.25), [[0.1, 0.2]], t=2.0)
    np.testing.assert_allclose(res.points[0], [0.6, 2.2], atol=1e-12)


@settings(max_examples=15)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 1), st.floats(0, 1))
def test_flow_group_law(s, t, x, y):
    X = cherry_field(validate=False)
    P = np.array([[x, y]])
    two = flow_batch(X, flow_batch(X, P, t=s).points, t=t).points
    one = flow_batch(X, P, t=s + t).points
    np.testing.assert_allclose(two, one, atol=1e-8)


def test_trajectory_in_sink_basin_never_reaches_section(cherry):
    with pytest.raises(CapturedError):
        flow(cherry, [SINK[0], SINK[1] - 0.01], until=1.0)
    with pytest.raises(CapturedError):
        flow(cherry, [SINK[0], SINK[1] - 0.01], until=1.0, sinks=[])


def test_sine_field_has_four_saddle_like_zeros():
    sings, _ = find_singularities(SINE)
    locs = sorted(tuple(np.round(s.location, 9) % 1.0) for s in sings)
    assert locs == [(0.0, 0.0), (0.0, 0.5), (0.5, 0.0), (0.5, 0.5)]
    for s in sings:
        assert np.abs(s.eigenvalues).tolist() == pytest.approx([2 * np.pi] * 2)
    kinds = sorted(s.kind for s in sings)
    assert kinds == ["hyperbolic-saddle", "hyperbolic-saddle", "hyperbolic-sink", "hyperbolic-source"]


def test_constant_field_has_no_zeros():
    assert find_singularities(TorusVectorField.from_exprs("1", "0.3"))[0] == []


def test_non_periodic_field_is_rejected():
    with pytest.raises(PeriodicityError):
        TorusVectorField.from_exprs("x", "1")


def test_cherry_singularities_match_oracle(cherry):
    sings, _ = find_singularities(cherry)
    by_kind = {s.kind: s for s in sings}
    assert set(by_kind) == {"hyperbolic-sink", "hyperbolic-saddle"}
    for kind, loc, eigs in (("hyperbolic-sink", SINK, SINK_EIGS), ("hyperbolic-saddle", SADDLE, SADDLE_EIGS)):
        s = by_kind[kind]
        np.testing.assert_allclose(s.location, loc, atol=1e-9)
        np.testing.assert_allclose(sorted(s.eigenvalues.real), eigs, atol=1e-6)
        assert s.residual <= 1e-10


def test_validation_of_the_shipped_member(cherry):
    rep = validate_cherry(cherry)
    assert rep.passed
    assert "closed-orbit-free: assumed" in rep.notes


@pytest.mark.parametrize("X", [linear_field(0.3), SINE])
def test_validation_rejects_wrong_singularity_sets(X):
    assert not validate_cherry(X).passed


def test_unknown_cherry_parameter():
    with pytest.raises(KeyError):
        cherry_field(gamma=1.0)


def test_pushforward_by_identity_is_unchanged(cherry):
    ident = TorusDiffeo.from_exprs(["x", "y"], ["x", "y"], "id")
    P = torus_grid(16)
    np.testing.assert_allclose(pushforward_torus_field(ident, cherry)(P), cherry(P))


def test_translation_moves_singularities(cherry):
    T = TorusDiffeo.from_exprs(["x + 0.25", "y + 0.1"], ["x - 0.25", "y - 0.1"], "shift")
    Y = pushforward_torus_field(T, cherry)
    locs = {s.kind: s.location for s in find_singularities(Y)[0]}
    np.testing.assert_allclose(locs["hyperbolic-sink"] % 1.0, (np.array(SINK) + [0.25, 0.1]) % 1.0, atol=1e-9)
    np.testing.assert_allclose(locs["hyperbolic-saddle"] % 1.0, (np.array(SADDLE) + [0.25, 0.1]) % 1.0, atol=1e-9)


def test_shear_keeps_the_field_cherry(cherry):
    shear = TorusDiffeo.from_exprs(["x + y", "y"], ["x - y", "y"], "shear")
    assert validate_cherry(pushforward_torus_field(shear, cherry)).passed
    assert not shear.preserves_sections()


def test_wrong_inverse_is_rejected():
    with pytest.raises(InverseMismatchError):
        TorusDiffeo.from_exprs(["x + 0.05*sin(2*pi*y)", "y"], ["x", "y"])


def test_pushforward_round_trip(cherry):
    D = TorusDiffeo.from_exprs(["x + 0.1*sin(2*pi*y)", "y"], ["x - 0.1*sin(2*pi*y)", "y"], "wave")
    inv = TorusDiffeo(D.phi_inv, D.phi, "wave^-1")
    back = pushforward_torus_field(inv, pushforward_torus_field(D, cherry))
    P = torus_grid(32)
    assert np.max(np.abs(back(P) - cherry(P))) <= 1e-7


def test_diffeo_incompatible_with_lattice():
    with pytest.raises(PeriodicityError):
        TorusDiffeo.from_exprs(["2*x", "y"], ["x/2", "y"])
