"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every test records one PASS/FAIL line, printed in the terminal summary.
"""

import numpy as np
import pytest

from helpers import STRUCTURE_SCENES, monomials, scene_path, shipped_structure
from bilag.cli import run
from bilag.geom import Chart, OneForm, ScalarField, TwoForm, VectorField, exterior_derivative
from bilag.lifts import (canonical_symplectic, cotangent_bundle, cotangent_structure, form_lift_residual,
                         lift_identity_residuals, tangent_bundle, verify_tangent_lift)
from bilag.scene import load_scene
from bilag.structure import check_affine, check_hess
from bilag.torus import (conjugate_map, critical_exponents, glue, grid_inversions, rotation_map, rotation_number,
                         verify_equivariance)

N_ITER = 10_000


def _worst(rep, name):
    return max(c.residual for c in _all_checks(rep) if c.name == name)


def _all_checks(rep):
    yield from rep.checks
    for s in rep.sections:
        yield from _all_checks(s)


def test_dtheta_conormal_structure_is_flat(criterion):
    with criterion(1, 30) as res:
        worst = {}
        for name in ("darboux2", "expq2", "darboux4"):
            C = cotangent_structure(shipped_structure(name), "dtheta")
            worst[name] = check_affine(C, C.samples(100), 1e-8).find("curvature").residual
        res["ok"] = max(worst.values()) <= 1e-8
        res["detail"] = "dtheta Hess curvature " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " <= 1e-8"
    assert res["passed"]


def test_tangent_lift_is_bi_lagrangian_with_lifted_hess(criterion):
    with criterion(2, 30) as res:
        ok, worst, flat = True, 0.0, None
        for name in STRUCTURE_SCENES:
            rep = verify_tangent_lift(shipped_structure(name), n=100)
            ok &= rep.passed
            for key in ("torsion", "nabla omega", "foliation preservation"):
                worst = max(worst, _worst(rep, key))
            if name == "darboux2":
                flat = _worst(rep, "curvature")
        ok &= worst <= 1e-7 and flat is not None and flat <= 1e-6
        res["ok"] = bool(ok)
        res["detail"] = f"{len(STRUCTURE_SCENES)} structures: omega^c / F^c checks pass, Hess residuals {worst:.1e} <= 1e-7, lifted Darboux curvature {flat:.1e}"
    assert res["passed"]


def test_liouville_form(criterion):
    with criterion(3, 5) as res:
        dd, det = 0.0, np.inf
        for m in (1, 2, 3):
            base = Chart("B", tuple(f"x{i}" for i in range(m)))
            pts = cotangent_bundle(base).samples(100)
            w = canonical_symplectic(base)
            dd = max(dd, float(np.max(np.abs(exterior_derivative(w).components(pts)))))
            det = min(det, float(np.min(np.abs(np.linalg.det(w.matrix(pts))))))
        res["ok"] = dd == 0.0 and det >= 0.99
        res["detail"] = f"max |d(d theta)| {dd:.1e}, min |det| {det:.3f} >= 0.99 for m = 1, 2, 3"
    assert res["passed"]


def test_hess_defining_properties(criterion):
    with criterion(4, 30) as res:
        worst, weakest = 0.0, np.inf
        for name in STRUCTURE_SCENES:
            S = shipped_structure(name)
            rep = check_hess(S, points=S.samples(100))
            for key in ("torsion", "nabla omega", "foliation preservation"):
                worst = max(worst, rep.find(key).residual)
            weakest = min(weakest, rep.find("uniqueness: weakest perturbation breaks residual by").residual)
        res["ok"] = worst <= 1e-7 and weakest >= 1e-4
        res["detail"] = (f"{len(STRUCTURE_SCENES)} structures: residuals {worst:.1e} <= 1e-7, "
                         f"1e-3 perturbation breaks by >= {weakest:.1e}")
    assert res["passed"]


@pytest.fixture(scope="module")
def cherry_scene():
    return load_scene(scene_path("cherry_a"))


def test_return_map_of_cherry_member(criterion, cherry_scene):
    with criterion(5, 120) as res:
        f = cherry_scene.circle_map("fA", grid=512)
        gap = f.meta["one_sided_gap"]
        inv = grid_inversions(f)
        res["ok"] = f.width > 0.01 and gap <= 1e-6 and inv == 0 and len(f.grid["x"]) == 512
        res["detail"] = f"flat width {f.width:.4f} > 0.01, limit gap {gap:.1e} <= 1e-6, {inv} inversions on 512 grid"
    assert res["passed"]


def test_rotation_numbers(criterion, cherry_scene):
    with criterion(6, 60) as res:
        rigid = rotation_number(rotation_map(0.3), N_ITER)
        rigid_err = abs(rigid.raw - 0.3)
        worst = 0.0
        cases = []
        for scene, role in (("cherry_a", "map"), ("glue", "map"), ("circle_maps", "map")):
            sc = cherry_scene if scene == "cherry_a" else load_scene(scene_path(scene))
            f = sc.circle_map(sc.roles[role], grid=512 if scene == "cherry_a" else None)
            r0 = rotation_number(f, N_ITER).value
            for phi in sc.circle_diffeos.values():
                r1 = rotation_number(conjugate_map(phi, f), N_ITER).value
                d = abs((r1 - r0 + 0.5) % 1.0 - 0.5)
                worst = max(worst, d)
                cases.append(d)
        bound = 2 / N_ITER + 1e-6
        res["ok"] = rigid_err <= 2 / N_ITER and worst <= bound
        res["detail"] = (f"rigid rotation error {rigid_err:.1e} <= 2e-4; conjugacy |drho| {worst:.1e} <= {bound:.6g} "
                         f"over {len(cases)} pairs")
    assert res["passed"]


def test_equivariance_for_cherry_member(criterion, cherry_scene):
    with criterion(7, 300) as res:
        f = cherry_scene.circle_map("fA", grid=512)
        X = cherry_scene.torus_fields["A"]
        errs = {}
        for name, phi in cherry_scene.circle_diffeos.items():
            rep = verify_equivariance(phi, X, grid=256, map_grid=512, f=f)
            errs[name] = max(c.residual for c in rep.checks)
        res["ok"] = len(errs) == 2 and max(errs.values()) <= 1e-4
        res["detail"] = "sup |g - phi f phi^-1| and flat-piece distances: " + ", ".join(
            f"{k} {v:.1e}" for k, v in errs.items()) + " <= 1e-4"
    assert res["passed"]


def test_gluing_synthetic_maps(criterion):
    with criterion(8, 10) as res:
        sc = load_scene(scene_path("glue"))
        n1, n2 = sc.roles["glue"]
        f1, f2 = sc.circle_map(n1), sc.circle_map(n2)
        g = glue(f1, f2)
        exact = (g.a, g.b) == (f1.a, f2.b)
        gaps = g.limit_gaps()
        fit = critical_exponents(g)
        e1, e2 = abs(fit.l1 - 2) / 2, abs(fit.l2 - 3) / 3
        res["ok"] = exact and max(gaps) <= 1e-6 and max(e1, e2) <= 0.1 and g.inversions() == 0
        res["detail"] = (f"flat piece ({g.a}, {g.b}) == (a1, b2), continuity gap {max(gaps):.1e} <= 1e-6, "
                         f"exponents ({fit.l1:.3f}, {fit.l2:.3f}) vs (2, 3)")
    assert res["passed"]


def _random_polynomial(rng, names, degree):
    terms = monomials(names, degree)
    return " + ".join(f"({c:.6f})*{m}" for c, m in zip(rng.uniform(-2, 2, len(terms)), terms))


def test_lift_algebra(criterion):
    with criterion(9, 10) as res:
        rng = np.random.default_rng(2024)
        chart = Chart("M", ("p", "q"))
        pts = tangent_bundle(chart).samples(100, seed=9)
        names = ("p", "q")
        worst = 0.0
        for _ in range(20):
            f = ScalarField.from_expr(chart, _random_polynomial(rng, names, 3))
            g = ScalarField.from_expr(chart, _random_polynomial(rng, names, 3))
            X = VectorField.from_exprs(chart, [_random_polynomial(rng, names, 2) for _ in names])
            Y = VectorField.from_exprs(chart, [_random_polynomial(rng, names, 2) for _ in names])
            w = TwoForm.from_exprs(chart, {("q", "p"): _random_polynomial(rng, names, 2)})
            a = OneForm.from_exprs(chart, [_random_polynomial(rng, names, 2) for _ in names])
            for r in lift_identity_residuals(f, g, X, pts).values():
                worst = max(worst, float(np.max(np.abs(r))))
            worst = max(worst, float(np.max(np.abs(form_lift_residual(w, [X, Y], pts)))),
                        float(np.max(np.abs(form_lift_residual(a, [X], pts)))))
        res["ok"] = worst <= 1e-9
        res["detail"] = f"product, derivation and form-lift identities: {worst:.1e} <= 1e-9 (20 inputs, 100 points)"
    assert res["passed"]


DETERMINISM_RUNS = (
    ["verify-theorem1", scene_path("expqp2"), "--seed", "3"],
    ["hess", scene_path("sheared2"), "--seed", "5"],
    ["cherry-validate", scene_path("cherry_a")],
    ["cherry-glue", scene_path("glue")],
    ["cherry-rho", scene_path("circle_maps")],
    ["cherry-conjugate", scene_path("glue")],
)


def test_reports_are_deterministic(criterion, tmp_path, capsys):
    with criterion(10, None) as res:
        same = []
        for k, argv in enumerate(DETERMINISM_RUNS):
            out = [tmp_path / f"{k}_{i}.json" for i in range(2)]
            for o in out:
                run(argv + ["--out", str(o)])
            same.append(out[0].read_bytes() == out[1].read_bytes() and out[0].stat().st_size > 0)
        capsys.readouterr()
        res["ok"] = all(same)
        res["detail"] = f"{sum(same)}/{len(same)} commands byte-identical over two runs"
    assert res["passed"]
