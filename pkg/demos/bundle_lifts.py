"""Lifting a bi-Lagrangian structure to the tangent and cotangent bundles.

On the cotangent bundle the canonical form d theta together with the
conormal foliations is again bi-Lagrangian, and its Hess connection is
flat.  Adding the pullback of omega still gives a bi-Lagrangian structure.
On the tangent bundle the complete lifts of omega and the foliations form a
bi-Lagrangian structure whose Hess connection is the complete lift of the
base connection.
"""

from importlib.resources import files

import numpy as np

from bilag.geom import ScalarField
from bilag.lifts import lift_identity_residuals, tangent_structure, verify_theorem1
from bilag.scene import load_scene

DATA = files("bilag") / "data"


def main():
    sc = load_scene(DATA / "expq2.scene")
    _, S = sc.pick("structures", "structure")

    rep = verify_theorem1(S, n=60, seed=3)
    print(rep.summary())

    T = tangent_structure(S)
    print("\ntangent bundle coordinates:", T.chart.coords)
    pts = T.samples(5, seed=0)
    print("omega^c at one point:\n", np.round(T.omega.components(pts[:1])[0], 4))

    # product rules and derivations for complete and vertical lifts
    f = ScalarField.from_expr(S.chart, "p*q + sin(q)")
    g = ScalarField.from_expr(S.chart, "exp(p) - q^2")
    X = S.F2.frame[0]
    res = lift_identity_residuals(f, g, X, T.samples(50, seed=0), T.chart)
    for name, r in res.items():
        print(f"{name:>10}: max residual {np.max(np.abs(r)):.2e}")


if __name__ == "__main__":
    main()
