import numpy as np
import pytest

from helpers import scene_path, shipped_structure
from bilag.lifts import cotangent_structure, tangent_structure
from bilag.scene import SceneError, emit_cotangent_scene, emit_tangent_scene, load_scene, loads
from bilag.structure import check_hess

SHIPPED = ("darboux2", "expq2", "darboux4", "expqp2", "sheared2", "cherry_a", "glue", "circle_maps", "linear")

BASE = """\
[scene]
name = tiny

[chart M]
coords = p, q
box = -1 1, -1 1

[form omega]
dq^dp = {omega}

[foliation F1]
coords = p

[foliation F2]
coords = q

[structure S]
omega = omega
F1 = F1
F2 = F2
"""


def test_golden_darboux_scene():
    sc = load_scene(scene_path("darboux2"))
    assert list(sc.charts) == ["M"]
    assert list(sc.structures) == ["S"]
    assert sc.charts["M"].coords == ("p", "q")
    assert sc.seed == 0 and sc.samples == 100


@pytest.mark.parametrize("name", SHIPPED)
def test_every_shipped_scene_loads(name):
    assert load_scene(scene_path(name)).name == name


def test_undeclared_coordinate_is_named_with_its_line():
    with pytest.raises(SceneError) as info:
        loads(BASE.format(omega="exp(r)"), "tiny.scene")
    msg = str(info.value)
    assert "'r'" in msg
    assert msg.startswith("tiny.scene:9:")


@pytest.mark.parametrize("text, needle", [
    (BASE.format(omega="1") + "\n[widget W]\nx = 1\n", "widget"),
    (BASE.format(omega="1").replace("coords = p\n", "coords = p\ncolour = red\n", 1), "colour"),
    (BASE.format(omega="1").replace("name = tiny", "name = tiny\nname = again"), "name"),
    (BASE.format(omega="1") + "\n[tolerances]\nwobble = 1e-3\n", "wobble"),
    (BASE.format(omega="1").replace("F1 = F1\n", "F1 = F9\n"), "F9"),
    (BASE.format(omega="(1 +"), "end of input"),
    (BASE.format(omega="1").replace("box = -1 1, -1 1", "box = -1 1"), "box"),
])
def test_malformed_scenes_are_rejected(text, needle):
    with pytest.raises(SceneError, match=needle):
        loads(text, "bad.scene")


def test_tolerance_override_reaches_reports():
    sc = loads(BASE.format(omega="exp(q)") + "\n[tolerances]\nhess = 1e-6\n")
    assert sc.tolerances.hess == 1e-6
    S = sc.structures["S"]
    rep = check_hess(S)
    assert rep.find("torsion").tolerance == 1e-6


def test_lets_substitute_into_expressions():
    S = shipped_structure("sheared2")
    np.testing.assert_allclose(S.F2.frame_matrix([[0.1, 0.2]])[0, 0], [0.5, 1.0])


def test_let_names_may_not_shadow_coordinates():
    text = BASE.format(omega="1") + "\n[let]\np = 2\n"
    with pytest.raises(SceneError, match="p"):
        loads(text)


def test_roles_must_resolve():
    text = BASE.format(omega="1").replace("name = tiny", "name = tiny\nstructure = T")
    with pytest.raises(SceneError, match="T"):
        loads(text)


def test_circle_map_specs_are_built_lazily():
    sc = load_scene(scene_path("glue"))
    f1 = sc.circle_map("f1")
    assert (f1.a, f1.b, f1.v) == (0.2, 0.5, 0.3)
    assert sc.circle_map("f1") is f1


@pytest.mark.parametrize("name", ["darboux2", "expqp2", "sheared2"])
def test_tangent_emission_round_trips(name):
    sc = load_scene(scene_path(name))
    S = sc.structures["S"]
    text = emit_tangent_scene(sc, S)
    again = loads(text).pick("structures", "structure")[1]
    direct = tangent_structure(S)
    pts = direct.samples(30)
    np.testing.assert_allclose(again.omega.components(pts), direct.omega.components(pts), atol=1e-14)
    for F, G in ((again.F1, direct.F1), (again.F2, direct.F2)):
        np.testing.assert_allclose(F.frame_matrix(pts), G.frame_matrix(pts), atol=1e-14)


@pytest.mark.parametrize("form", ["dtheta", "mixed"])
@pytest.mark.parametrize("name", ["darboux2", "darboux4", "expqp2"])
def test_cotangent_emission_round_trips(name, form):
    sc = load_scene(scene_path(name))
    S = sc.structures["S"]
    again = loads(emit_cotangent_scene(sc, S, form)).pick("structures", "structure")[1]
    direct = cotangent_structure(S, form)
    pts = direct.samples(30)
    np.testing.assert_allclose(again.omega.components(pts), direct.omega.components(pts), atol=1e-14)
    assert again.verify().passed
