"""Bi-Lagrangian structures and their Hess connections.

We load two shipped planar scenes, check that each one really is
bi-Lagrangian, and look at the unique connection that is torsion free,
keeps omega parallel and preserves both foliations.  The Darboux plane is
flat.  The weighted form e^q dq ^ dp is flat too, because its
curvature only sees the mixed derivative of the weight.  A weight with a
genuine mixed term, 1 + q^2 + p^2/3 on the sheared scene, gives a curved
connection.
"""

from importlib.resources import files

import numpy as np

from bilag.scene import load_scene
from bilag.structure import check_affine, check_hess

DATA = files("bilag") / "data"


def show(scene_name):
    sc = load_scene(DATA / f"{scene_name}.scene")
    _, S = sc.pick("structures", "structure")
    pts = S.samples(200, seed=1)
    print(f"--- {scene_name}: coordinates {S.chart.coords}")
    print(S.verify(pts).summary())
    hess = check_hess(S, points=pts)
    print(hess.summary())
    G = S.hess.christoffel(pts[:1], 0).value[0]
    print("Christoffel symbols at", np.round(pts[0], 3))
    print(np.round(G, 4))
    curv = check_affine(S, pts).checks[0].residual
    print(f"max |curvature| over samples: {curv:.3e}\n")


if __name__ == "__main__":
    for name in ("darboux2", "expq2", "sheared2"):
        show(name)
