import numpy as np
import pytest
from hypothesis import given, settings

from helpers import STRUCTURE_SCENES, polynomials, shipped_structure
from bilag.expr import diff, evaluate, parse
from bilag.geom import Chart, Map, TwoForm, VectorField, curvature_tensor
from bilag.structure import (BiLagrangianStructure, DegenerateStructureError, Foliation, StructureError,
                             Tolerances, check_affine, check_hess, check_lagrangian, check_symplectic,
                             check_transversal, darboux, para_kahler, pushforward_structure, transversality_values)

PQ = Chart("M", ("p", "q"))


def structure(omega_src, chart=PQ, F1=("p",), F2=("q",)):
    omega = TwoForm.from_exprs(chart, {("q", "p"): omega_src})
    return BiLagrangianStructure(chart, omega, Foliation.coordinate(chart, F1, "F1"),
                                 Foliation.coordinate(chart, F2, "F2"), omega_src)


def test_darboux_form_is_exactly_closed():
    rep = check_symplectic(darboux(2).omega, darboux(2).samples())
    assert rep.passed
    assert rep.find("d omega").residual == 0.0


def test_degenerate_form_fails_at_the_origin():
    S = structure("q")
    pts = np.vstack([S.samples(20), [[0.3, 0.0]]])
    rep = check_symplectic(S.omega, pts)
    assert not rep.passed
    assert rep.find("|det omega|").worst_point.tolist() == [0.3, 0.0]


def test_every_planar_two_form_is_closed():
    S = structure("1 + q^2")
    assert check_symplectic(S.omega, S.samples()).passed


def test_odd_dimension_is_rejected():
    c = Chart("odd", ("x", "y", "z"))
    with pytest.raises(StructureError):
        check_symplectic(TwoForm.from_exprs(c, {("x", "y"): "1"}), c.samples(3))


@pytest.mark.parametrize("frame", [["1", "0"], ["1", "1"], ["q", "p^2 + 1"]])
def test_any_line_field_in_the_plane_is_lagrangian(frame):
    F = Foliation(PQ, [VectorField.from_exprs(PQ, frame)])
    assert check_lagrangian(structure("exp(p)").omega, F, PQ.samples()).passed


@pytest.mark.parametrize("names, ok", [(("p1", "q2"), True), (("p1", "q1"), False), (("p1", "p2"), True)])
def test_lagrangian_subspaces_in_four_dimensions(names, ok):
    S = darboux(2)
    F = Foliation.coordinate(S.chart, names)
    assert check_lagrangian(S.omega, F, S.samples()).passed is ok


def test_lagrangian_rejects_wrong_rank():
    S = darboux(2)
    with pytest.raises(StructureError):
        check_lagrangian(S.omega, Foliation.coordinate(S.chart, ["p1"]), S.samples(3))


def _smallest_singular(q):
    # frame rows (1, 0) and (1, q): s_min^2 = (t - sqrt(t^2 - 4 q^2)) / 2 with t = 2 + q^2
    t = 2 + q ** 2
    return np.sqrt((t - np.sqrt(t ** 2 - 4 * q ** 2)) / 2)


@pytest.mark.parametrize("box, ok", [(((-1, 1), (0.5, 1.0)), True), (((-1, 1), (-1.0, 1.0)), False)])
def test_transversality_near_a_degenerate_line(box, ok):
    chart = Chart("M", ("p", "q"), box)
    F1 = Foliation.coordinate(chart, ["p"])
    F2 = Foliation(chart, [VectorField.from_exprs(chart, ["1", "q"])])
    pts = chart.samples(50)
    if not ok:
        pts = np.vstack([pts, [[0.2, 0.0]]])
    np.testing.assert_allclose(transversality_values(F1, F2, pts), _smallest_singular(pts[:, 1]), atol=1e-12)
    assert check_transversal(F1, F2, pts).passed is ok


def test_identical_foliations_are_not_transversal():
    F = Foliation.coordinate(PQ, ["p"])
    assert not check_transversal(F, F, PQ.samples(5)).passed


def test_structure_rejects_odd_dimension_and_bad_ranks():
    c = Chart("odd", ("x", "y", "z"))
    w = TwoForm.from_exprs(c, {("x", "y"): "1"})
    with pytest.raises(StructureError):
        BiLagrangianStructure(c, w, Foliation.coordinate(c, ["x"]), Foliation.coordinate(c, ["y"]))


@pytest.mark.parametrize("name", STRUCTURE_SCENES)
def test_shipped_structures_verify(name):
    S = shipped_structure(name)
    assert S.verify().passed


def test_darboux_hess_connection_vanishes():
    S = darboux(2)
    assert np.all(S.hess.christoffel(S.samples()).value == 0)
    assert check_affine(S).find("curvature").residual <= 1e-12


def test_exponential_form_has_nonzero_christoffels_and_small_residuals():
    S = structure("exp(q)")
    rep = check_hess(S)
    assert rep.passed
    assert rep.data["christoffel_max"] > 0.1
    for name in ("torsion", "nabla omega", "foliation preservation"):
        assert rep.find(name).residual <= 1e-7


@pytest.mark.parametrize("name", STRUCTURE_SCENES)
def test_hess_defining_properties_and_uniqueness(name):
    S = shipped_structure(name)
    rep = check_hess(S)
    assert rep.passed, rep.failures()
    assert rep.find("uniqueness: weakest perturbation breaks residual by").residual >= 1e-4


def test_perturbed_connection_breaks_a_residual():
    S = structure("exp(q)")
    bad = S.hess.perturbed(0, 1, 1, 1e-3)
    rep = check_hess(S, bad, uniqueness=False)
    assert max(c.residual for c in rep.checks) >= 1e-4


@settings(max_examples=15)
@given(polynomials(("p", "q"), 2))
def test_conformal_area_form_christoffels_and_curvature(g):
    # omega = e^g dq^dp: Gamma^p_pp = g_p, Gamma^q_qq = g_q, R(dp, dq)dp = -g_pq dp, R(dp, dq)dq = g_pq dq
    S = structure(f"exp({g})")
    pts = S.samples(10)
    e = parse(g)
    gp, gq, gpq = diff(e, "p"), diff(e, "q"), diff(diff(e, "p"), "q")
    G = S.hess.christoffel(pts).value
    R = check_affine(S, pts)
    Rt = curvature_tensor(S.hess, pts)
    for k, (p, q) in enumerate(pts):
        env = {"p": p, "q": q}
        expected = np.zeros((2, 2, 2))
        expected[0, 0, 0] = evaluate(gp, env)
        expected[1, 1, 1] = evaluate(gq, env)
        np.testing.assert_allclose(G[k], expected, atol=1e-9)
        h = evaluate(gpq, env)
        assert Rt[k, 0, 0, 0, 1] == pytest.approx(-h, abs=1e-8)
        assert Rt[k, 1, 1, 0, 1] == pytest.approx(h, abs=1e-8)
    assert R.find("curvature").residual == pytest.approx(np.max(np.abs(Rt)), abs=0)


def test_exp_qp_curvature_oracle():
    S = shipped_structure("expqp2")
    pts = S.samples(20)
    R = curvature_tensor(S.hess, pts)
    np.testing.assert_allclose(R[:, 0, 0, 0, 1], -1.0, atol=1e-9)
    assert check_affine(S, pts).find("curvature").residual == pytest.approx(1.0, abs=1e-9)


def test_para_kahler_frame_matrix_is_diagonal():
    pk = para_kahler(darboux(1))
    np.testing.assert_allclose(pk.F(darboux(1).samples(5)), np.broadcast_to(np.diag([1.0, -1.0]), (5, 2, 2)))


@pytest.mark.parametrize("name", STRUCTURE_SCENES)
def test_para_kahler_invariants(name):
    S = shipped_structure(name)
    pk = para_kahler(S)
    rep = pk.verify()
    assert rep.passed
    G = pk.G(S.samples())
    assert np.max(np.abs(G - np.swapaxes(G, -1, -2))) <= 1e-9
    F = pk.F_in_frame(S.samples(5))
    np.testing.assert_allclose(F, np.broadcast_to(np.diag([1.0] * S.n + [-1.0] * S.n), F.shape), atol=1e-12)


def test_pushforward_by_identity_keeps_the_form():
    S = structure("exp(q)")
    ident = Map.identity(PQ)
    T = pushforward_structure(ident, ident, S)
    np.testing.assert_allclose(T.omega.components(PQ.samples()), S.omega.components(PQ.samples()))


def test_linear_symplectic_map_preserves_darboux_form():
    S = darboux(1)
    phi = Map.from_exprs(S.chart, S.chart, ["p + q", "q"])
    phi_inv = Map.from_exprs(S.chart, S.chart, ["p - q", "q"])
    T = pushforward_structure(phi, phi_inv, S)
    pts = S.samples()
    np.testing.assert_allclose(T.omega.components(pts), S.omega.components(pts), atol=1e-10)
    assert T.verify().passed


def test_scaling_map_image_passes_all_checks():
    S = structure("exp(q)")
    target = Chart("N", ("p", "q"), ((-0.5, 0.5), (-2, 2)))
    phi = Map.from_exprs(PQ, target, ["p/2", "2*q"])
    phi_inv = Map.from_exprs(target, PQ, ["2*p", "q/2"])
    T = pushforward_structure(phi, phi_inv, S)
    assert T.verify().passed
    assert check_hess(T).passed


def test_pushforward_round_trip_restores_omega():
    S = shipped_structure("expqp2")
    phi = Map.from_exprs(S.chart, S.chart, ["p + q^3/3", "q"])
    phi_inv = Map.from_exprs(S.chart, S.chart, ["p - q^3/3", "q"])
    back = pushforward_structure(phi_inv, phi, pushforward_structure(phi, phi_inv, S))
    pts = S.samples()
    np.testing.assert_allclose(back.omega.components(pts), S.omega.components(pts), atol=1e-8)


def test_degenerate_frames_abort_hess_with_the_point():
    c = Chart("M", ("p", "q"))
    F2 = Foliation(c, [VectorField.from_exprs(c, ["1", "q"])])
    S = BiLagrangianStructure(c, TwoForm.from_exprs(c, {("q", "p"): "1"}), Foliation.coordinate(c, ["p"]), F2)
    with pytest.raises(DegenerateStructureError) as info:
        S.hess.christoffel([[0.1, 0.0]])
    assert info.value.point.tolist() == [0.1, 0.0]


def test_tolerance_override():
    t = Tolerances().override({"hess": 1e-6})
    assert t.hess == 1e-6
    with pytest.raises(KeyError):
        Tolerances().override({"nope": 1.0})
