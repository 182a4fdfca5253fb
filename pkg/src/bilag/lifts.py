"""Vertical and complete lifts to the tangent bundle, cotangent-bundle structures.

Induced coordinates on ``TM`` are ``(y^1..y^m, y^1_dot..y^m_dot)`` and on
``T*M`` they are ``(y^1..y^m, xi_1..xi_m)``.  Fiber coordinate names are
``<name>_dot`` and ``xi_<name>``.

Lift rules for a covariant tensor ``T`` with components ``T_I`` on the base:
a component of ``T^c`` whose indices are all horizontal is ``(T_I)^c``, one
with exactly one fiber index is ``(T_I)^v``, all others vanish.  The complete
lift of a connection has ``Gamma^k_ij`` horizontally, ``(Gamma^k_ij)^c`` in
the slot with an upper fiber index, ``(Gamma^k_ij)^v`` with an upper and one
lower fiber index, and zeros elsewhere.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from . import jet as _jet
from .geom import (
    Chart,
    ChartMismatchError,
    Connection,
    CovariantTensor,
    Form,
    OneForm,
    ScalarField,
    TwoForm,
    VectorField,
    as_points,
    covariant_derivative_tensor,
    curvature_tensor,
    exterior_derivative,
)
from .jet import Jet, jet_space
from .report import VerificationReport
from .structure import (
    BiLagrangianStructure,
    Foliation,
    StructureError,
    Tolerances,
    check_affine,
    check_hess,
    check_symplectic,
)

FOLIATION_CLOSURE_NOTE = (
    "lifted foliation frames are complete lifts plus vertical lifts of the base frame "
    "(distribution closure of the complete lifts)"
)


class BundleChart(Chart):
    """A chart on ``TM`` or ``T*M`` induced by a base chart."""

    def __init__(self, base: Chart, kind: str, fiber_box=(-1.0, 1.0)):
        if kind not in ("tangent", "cotangent"):
            raise ValueError(f"unknown bundle kind {kind!r}")
        fib = fiber_names(base, kind)
        prefix = "T" if kind == "tangent" else "T*"
        box = tuple(base.box) + tuple(tuple(map(float, fiber_box)) for _ in fib)
        super().__init__(f"{prefix}{base.name}", tuple(base.coords) + fib, box)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "kind", kind)

    def __eq__(self, other):
        return isinstance(other, BundleChart) and (self.name, self.coords) == (other.name, other.coords)

    def __hash__(self):
        return hash((self.name, self.coords))

    @property
    def base_dim(self) -> int:
        return self.base.dim


def fiber_names(base: Chart, kind: str) -> tuple:
    if kind == "tangent":
        names = tuple(f"{c}_dot" for c in base.coords)
    else:
        names = tuple(f"xi_{c}" for c in base.coords)
    clash = set(names) & set(base.coords)
    if clash:
        raise ValueError(f"fiber coordinate names clash with base coordinates: {sorted(clash)}")
    return names


@lru_cache(maxsize=None)
def _bundle(base: Chart, kind: str, fiber_box) -> BundleChart:
    return BundleChart(base, kind, fiber_box)


def tangent_bundle(base: Chart, fiber_box=(-1.0, 1.0)) -> BundleChart:
    return _bundle(base, "tangent", tuple(fiber_box))


def cotangent_bundle(base: Chart, fiber_box=(-1.0, 1.0)) -> BundleChart:
    return _bundle(base, "cotangent", tuple(fiber_box))


def _split(chart: BundleChart, P):
    m = chart.base_dim
    P = as_points(chart, P)
    return P[:, :m], m


def _embed(j: Jet, m: int) -> Jet:
    """Base jet in ``m`` variables viewed as a jet on the ``2m``-dimensional bundle."""
    return j.embed(2 * m, range(m))


def _fiber_jets(P: np.ndarray, m: int, r: int) -> Jet:
    return Jet.variables(jet_space(2 * m, r), P)[:, m:]


def _complete_jet(fn, base_pts, P, m, r) -> Jet:
    """``(T_I)^c = ydot^i d_i T_I`` for a base jet-function ``fn`` with tensor axes."""
    g = _embed(fn(base_pts, r + 1).gradient(), m)  # (..., i)
    ydot = _fiber_jets(P, m, r)
    extra = len(g.shape) - 2
    ydot = ydot.reshape(len(P), *([1] * extra), m)
    return (g * ydot).sum(-1)


# functions and vector fields ----------------------------------------------------------------


def _tangent(chart: Chart, bundle: BundleChart | None) -> BundleChart:
    bundle = bundle or tangent_bundle(chart)
    if bundle.kind != "tangent" or bundle.base != chart:
        raise ChartMismatchError("bundle chart does not belong to the base chart")
    return bundle


def vlift_fn(f: ScalarField, bundle: BundleChart | None = None) -> ScalarField:
    """``f^v = f o pi``."""
    T = _tangent(f.chart, bundle)

    def fn(P, r):
        x, m = _split(T, P)
        return _embed(f._fn(x, r), m)

    return ScalarField(T, fn)


def clift_fn(f: ScalarField, bundle: BundleChart | None = None) -> ScalarField:
    """``f^c = ydot^i d_i f``."""
    T = _tangent(f.chart, bundle)

    def fn(P, r):
        x, m = _split(T, P)
        return _complete_jet(f._fn, x, P, m, r)

    return ScalarField(T, fn)


def vlift_vf(X: VectorField, bundle: BundleChart | None = None) -> VectorField:
    """``X^v = X^i d/d ydot^i``."""
    T = _tangent(X.chart, bundle)

    def fn(P, r):
        x, m = _split(T, P)
        xj = _embed(X._fn(x, r), m)
        return Jet(xj.space, np.concatenate([np.zeros_like(xj.c), xj.c], axis=1))

    return VectorField(T, fn)


def clift_vf(X: VectorField, bundle: BundleChart | None = None) -> VectorField:
    """``X^c = X^i d/dy^i + ydot^j (d_j X^i) d/d ydot^i``."""
    T = _tangent(X.chart, bundle)

    def fn(P, r):
        x, m = _split(T, P)
        xj = _embed(X._fn(x, r), m)
        xc = _complete_jet(X._fn, x, P, m, r)
        return Jet(xj.space, np.concatenate([xj.c, xc.c], axis=1))

    return VectorField(T, fn)


# tensors and forms -----------------------------------------------------------------------------


def clift_tensor(T: Form, bundle: BundleChart | None = None) -> Form:
    """Complete lift of a covariant tensor or form, component by component."""
    B = _tangent(T.chart, bundle)
    k = T.degree

    def fn(P, r):
        x, m = _split(B, P)
        tv = _embed(T._fn(x, r), m)
        tc = _complete_jet(T._fn, x, P, m, r)
        out = np.zeros((len(P),) + (2 * m,) * k + (tv.space.size,))
        lo, hi = slice(0, m), slice(m, 2 * m)
        out[(slice(None),) + (lo,) * k] = tc.c
        for s in range(k):
            idx = tuple(hi if t == s else lo for t in range(k))
            out[(slice(None),) + idx] = tv.c
        return Jet(tv.space, out)

    if isinstance(T, OneForm):
        return OneForm(B, fn)
    if isinstance(T, TwoForm):
        return TwoForm(B, fn)
    return CovariantTensor(B, k, fn)


def clift_form(T: Form, bundle: BundleChart | None = None) -> Form:
    return clift_tensor(T, bundle)


def clift_connection(conn: Connection, bundle: BundleChart | None = None) -> Connection:
    B = _tangent(conn.chart, bundle)

    def fn(P, r):
        x, m = _split(B, P)
        gv = _embed(conn._fn(x, r), m)
        gc = _complete_jet(conn._fn, x, P, m, r)
        out = np.zeros((len(P), 2 * m, 2 * m, 2 * m, gv.space.size))
        lo, hi = slice(0, m), slice(m, 2 * m)
        out[:, lo, lo, lo] = gv.c
        out[:, hi, lo, lo] = gc.c
        out[:, hi, hi, lo] = gv.c
        out[:, hi, lo, hi] = gv.c
        return Jet(gv.space, out)

    return Connection(B, fn, name=f"{conn.name}^c")


def clift_foliation(F: Foliation, bundle: BundleChart | None = None) -> Foliation:
    """Frame ``{X^c} + {X^v}`` over the frame ``{X}`` of ``F``; rank doubles."""
    B = _tangent(F.chart, bundle)
    frame = [clift_vf(X, B) for X in F.frame] + [vlift_vf(X, B) for X in F.frame]
    return Foliation(B, frame, f"{F.name}^c")


def tangent_structure(S: BiLagrangianStructure, fiber_box=(-1.0, 1.0)) -> BiLagrangianStructure:
    """``(omega^c, F1^c, F2^c)`` on ``TM``."""
    B = tangent_bundle(S.chart, fiber_box)
    return BiLagrangianStructure(B, clift_form(S.omega, B), clift_foliation(S.F1, B), clift_foliation(S.F2, B),
                                 f"T{S.name}", S.tol)


# cotangent bundle -------------------------------------------------------------------------------


def _cotangent(base: Chart, bundle: BundleChart | None) -> BundleChart:
    bundle = bundle or cotangent_bundle(base)
    if bundle.kind != "cotangent" or bundle.base != base:
        raise ChartMismatchError("bundle chart does not belong to the base chart")
    return bundle


def tautological_form(base: Chart, bundle: BundleChart | None = None) -> OneForm:
    """``theta = xi_i dy^i``."""
    B = _cotangent(base, bundle)
    m = base.dim
    comps = list(B.coords[m:]) + ["0"] * m
    return OneForm.from_exprs(B, comps)


def canonical_symplectic(base: Chart, bundle: BundleChart | None = None) -> TwoForm:
    """``d theta = d xi_i ^ dy^i``, computed as the exterior derivative of ``theta``."""
    return exterior_derivative(tautological_form(base, bundle))


def conormal_foliation(F: Foliation, bundle: BundleChart | None = None) -> Foliation:
    """``N*F`` with frame ``d/dy^i`` (``i`` tangent to ``F``) and ``d/dxi_j`` (``j`` transverse).

    ``F`` must be spanned by coordinate fields.
    """
    B = _cotangent(F.chart, bundle)
    idx = F.adapted_indices()
    if idx is None:
        raise StructureError(f"conormal_foliation needs {F.name} spanned by coordinate fields (adapted chart)")
    m = F.chart.dim
    names = [B.coords[i] for i in idx] + [B.coords[m + j] for j in range(m) if j not in idx]
    return Foliation.coordinate(B, names, f"N*{F.name}")


def projection_pullback(omega: Form, bundle: BundleChart) -> Form:
    """``pi^* omega`` for a base form on either bundle."""
    if bundle.base != omega.chart:
        raise ChartMismatchError("form is not on the base of the bundle")
    k = omega.degree

    def fn(P, r):
        x, m = _split(bundle, P)
        w = _embed(omega._fn(x, r), m)
        out = np.zeros((len(P),) + (2 * m,) * k + (w.space.size,))
        out[(slice(None),) + (slice(0, m),) * k] = w.c
        return Jet(w.space, out)

    return type(omega)(bundle, fn) if k in (1, 2) else Form(bundle, k, fn)


def mixed_form(omega: TwoForm, bundle: BundleChart | None = None, *, points=None,
               tol: Tolerances | None = None) -> TwoForm:
    """``pi^* omega + d theta``; ``omega`` must pass the symplectic check on the base."""
    B = _cotangent(omega.chart, bundle)
    tol = tol or Tolerances()
    p = omega.chart.samples() if points is None else points
    rep = check_symplectic(omega, p, tol)
    if not rep.passed:
        raise StructureError("mixed_form needs a symplectic base form:\n" + rep.summary())
    return projection_pullback(omega, B) + canonical_symplectic(omega.chart, B)


def cotangent_structure(S: BiLagrangianStructure, form: str = "dtheta", fiber_box=(-1.0, 1.0)) -> BiLagrangianStructure:
    """``(d theta, N*F1, N*F2)`` or ``(pi^* omega + d theta, N*F1, N*F2)`` on ``T*M``."""
    B = cotangent_bundle(S.chart, fiber_box)
    if form == "dtheta":
        w = canonical_symplectic(S.chart, B)
    elif form == "mixed":
        w = mixed_form(S.omega, B, tol=S.tol)
    else:
        raise ValueError(f"unknown cotangent form {form!r}")
    label = "dtheta" if form == "dtheta" else "mixed"
    return BiLagrangianStructure(B, w, conormal_foliation(S.F1, B), conormal_foliation(S.F2, B),
                                 f"T*{S.name}[{label}]", S.tol)


def dtheta_adapted_matrix(n: int) -> np.ndarray:
    """``sum (d xi_i ^ dp^i + d xi_{n+i} ^ dq^i)`` on ``(p, q, xi)`` as a constant matrix."""
    m = 2 * n
    M = np.zeros((2 * m, 2 * m))
    for i in range(m):
        M[m + i, i] = 1.0
        M[i, m + i] = -1.0
    return M


# lift identities ----------------------------------------------------------------------------------


def lift_identity_residuals(f: ScalarField, g: ScalarField, X: VectorField, points, bundle=None) -> dict:
    """Product rules ``(fg)^c = f^c g^v + f^v g^c`` and ``(fX)^c = f^c X^v + f^v X^c``,
    plus ``X^v(f^c) = (Xf)^v`` and ``X^c(f^c) = (Xf)^c``.
    """
    B = _tangent(f.chart, bundle)
    P = as_points(B, points)
    fv, fc, gv, gc = vlift_fn(f, B), clift_fn(f, B), vlift_fn(g, B), clift_fn(g, B)
    out = {}
    out["(fg)^c"] = clift_fn(f * g, B)(P) - (fc * gv + fv * gc)(P)
    lhs = clift_vf(f * X, B).jet(P, 0).value
    rhs = (fc * vlift_vf(X, B) + fv * clift_vf(X, B)).jet(P, 0).value
    out["(fX)^c"] = lhs - rhs
    Xf = X.apply(f)
    out["X^v(f^c)"] = vlift_vf(X, B).apply(fc)(P) - vlift_fn(Xf, B)(P)
    out["X^c(f^c)"] = clift_vf(X, B).apply(fc)(P) - clift_fn(Xf, B)(P)
    return out


def form_lift_residual(T: Form, fields, points, bundle=None) -> np.ndarray:
    """``T^c(X1^c, .., Xr^c) - (T(X1, .., Xr))^c`` at bundle points."""
    B = _tangent(T.chart, bundle)
    P = as_points(B, points)
    Tc = clift_tensor(T, B)
    lifted = [clift_vf(X, B) for X in fields]

    def contract(form, vecs, p, r):
        t = form._fn(p, r)
        for v in vecs:
            t = _contract_first(t, v._fn(p, r))
        return t

    lhs = contract(Tc, lifted, P, 0).value
    base_val = ScalarField(T.chart, lambda p, r: contract(T, fields, p, r))
    rhs = clift_fn(base_val, B)(P)
    return lhs - rhs


def _contract_first(t: Jet, v: Jet) -> Jet:
    """Contract the first tensor axis of ``t`` (shape ``(N, m, ...)``) with ``v`` (``(N, m)``)."""
    rest = t.shape[2:]
    flat = t.reshape(t.shape[0], t.shape[1], -1)
    out = _jet.einsum("...i,...ij->...j", v, flat)
    return out.reshape(t.shape[0], *rest) if rest else out[:, 0]


def connection_lift_residual(conn: Connection, X: VectorField, Y: VectorField, points, bundle=None) -> np.ndarray:
    """``nabla^c_{X^c} Y^c - (nabla_X Y)^c``."""
    B = _tangent(conn.chart, bundle)
    P = as_points(B, points)
    lhs = clift_connection(conn, B).covariant(clift_vf(X, B), clift_vf(Y, B)).jet(P, 0).value
    rhs = clift_vf(conn.covariant(X, Y), B).jet(P, 0).value
    return lhs - rhs


# the theorem-1 verification ------------------------------------------------------------------------


def verify_cotangent_lift(S: BiLagrangianStructure, form: str = "dtheta", *, n: int = 100, seed: int = 0,
                          tol: Tolerances | None = None, flat_tol: float = 1e-8, uniqueness: bool = True,
                          fiber_box=(-1.0, 1.0)) -> VerificationReport:
    """``(T*M, d theta, N*F1, N*F2)`` is affine bi-Lagrangian, or ``(T*M, pi^* omega + d theta, ...)`` is bi-Lagrangian."""
    tol = tol or S.tol
    C = cotangent_structure(S, form, fiber_box)
    pts = C.samples(n, seed)
    if form == "mixed":
        rep = VerificationReport("(T*M, pi^* omega + d theta, N*F1, N*F2) bi-Lagrangian")
        rep.section(C.verify(pts, tol))
        return rep
    rep = VerificationReport("(T*M, d theta, N*F1, N*F2) affine bi-Lagrangian")
    rep.section(C.verify(pts, tol))
    rep.section(check_hess(C, points=pts, tol=tol, uniqueness=uniqueness))
    rep.section(check_affine(C, pts, flat_tol))
    if set(S.F1.adapted_indices() or ()) == set(range(S.n)) and set(S.F2.adapted_indices() or ()) == set(range(S.n, 2 * S.n)):
        err = C.omega.components(pts) - dtheta_adapted_matrix(S.n)
        rep.add_max("d theta vs sum(d xi_i ^ dp^i + d xi_(n+i) ^ dq^i)", err, 0.0, pts,
                    operation="canonical_symplectic")
    else:
        rep.note("base frames not in (p, q) order; adapted-coordinate identity for d theta skipped")
    return rep


def verify_tangent_lift(S: BiLagrangianStructure, *, n: int = 100, seed: int = 0, tol: Tolerances | None = None,
                        uniqueness: bool = True, fiber_box=(-1.0, 1.0)) -> VerificationReport:
    """``(TM, omega^c, F1^c, F2^c)`` is bi-Lagrangian with Hess connection the complete lift ``nabla^c``."""
    tol = tol or S.tol
    T = tangent_structure(S, fiber_box)
    pts = T.samples(n, seed)
    rep = VerificationReport("(TM, omega^c, F1^c, F2^c) bi-Lagrangian with Hess connection nabla^c")
    rep.note(FOLIATION_CLOSURE_NOTE)
    rep.section(T.verify(pts, tol))
    lifted = clift_connection(S.hess, T.chart)
    rep.section(check_hess(T, lifted, pts, tol, uniqueness=uniqueness))
    Gl = lifted.christoffel(pts, 0).value
    Gd = T.hess.christoffel(pts, 0).value
    rep.add_max("nabla^c - Hess(omega^c, F1^c, F2^c)", Gl - Gd, tol.hess, pts, operation="clift_connection")
    nw_lift = clift_tensor(covariant_derivative_tensor(S.hess, S.omega), T.chart).components(pts)
    nw_up = covariant_derivative_tensor(lifted, T.omega).components(pts)
    rep.add_max("nabla^c omega^c - (nabla omega)^c", nw_up - nw_lift, tol.hess, pts, operation="clift_connection")
    law = np.zeros(len(pts))
    frame = S.F1.frame + S.F2.frame
    for X in frame:
        for Y in frame:
            law = np.maximum(law, np.max(np.abs(connection_lift_residual(S.hess, X, Y, pts, T.chart)), axis=1))
    rep.add_max("nabla^c_(X^c) Y^c - (nabla_X Y)^c on frames", law, tol.hess, pts, operation="clift_connection")
    base_aff = check_affine(S, S.samples(n, seed), tol.affine)
    rep.data["base_curvature"] = base_aff.checks[0].residual
    if base_aff.passed:
        rep.section(check_affine(T, pts, tol.affine, conn=lifted))
    else:
        rep.note("base structure is not affine; lifted flatness not required")
        rep.data["lift_curvature"] = float(np.max(np.abs(curvature_tensor(lifted, pts))))
    return rep


def verify_theorem1(S: BiLagrangianStructure, *, n: int = 100, seed: int = 0, tol: Tolerances | None = None,
                    flat_tol: float = 1e-8, uniqueness: bool = True, fiber_box=(-1.0, 1.0)) -> VerificationReport:
    """Three-item check of the bundle structures built from ``S``.

    1. ``(T*M, d theta, N*F1, N*F2)`` is bi-Lagrangian and flat, and ``d theta``
       matches the adapted-coordinate expression exactly.
    2. ``(T*M, pi^* omega + d theta, N*F1, N*F2)`` is bi-Lagrangian.
    3. ``(TM, omega^c, F1^c, F2^c)`` is bi-Lagrangian with Hess connection the
       complete lift of the Hess connection of ``S``; flatness is inherited.
    """
    tol = tol or S.tol
    rep = VerificationReport(f"bundle structures of {S.name}")
    rep.note("cotangent coordinates ordered (base coords, xi_<base coord>); d theta = d xi_i ^ dy^i")
    rep.note(FOLIATION_CLOSURE_NOTE)
    base = S.verify(S.samples(n, seed), tol)
    base.title = f"base structure {S.name}"
    rep.section(base)
    kw = dict(n=n, seed=seed, tol=tol, uniqueness=uniqueness, fiber_box=fiber_box)
    item1 = verify_cotangent_lift(S, "dtheta", flat_tol=flat_tol, **kw)
    item1.title = "item 1: " + item1.title
    rep.section(item1)
    item2 = verify_cotangent_lift(S, "mixed", **kw)
    item2.title = "item 2: " + item2.title
    rep.section(item2)
    item3 = verify_tangent_lift(S, **kw)
    item3.title = "item 3: " + item3.title
    rep.section(item3)
    return rep
