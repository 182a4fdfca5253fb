"""Foliations, bi-Lagrangian structures and their Hess connection.

A bi-Lagrangian structure on a ``2n``-dimensional chart is a symplectic form
``omega`` with two transversal Lagrangian foliations ``F1``, ``F2``, each given
by a frame of ``n`` vector fields.  All checks are residual based: quantities
are evaluated on a deterministic sample set and compared with tolerances.

The Hess connection is built from the frame ``e_1..e_n`` (``F1``) followed by
``e_{n+1}..e_{2n}`` (``F2``):

* same foliation: ``omega(nabla_{e_a} e_b, e_c) = e_a omega(e_b, e_c) - omega(e_b, [e_a, e_c])``
  for ``e_c`` in the opposite frame, solved for ``nabla_{e_a} e_b`` inside the foliation of ``e_b``;
* mixed: ``nabla_{e_a} e_b`` is the component of ``[e_a, e_b]`` along the foliation of ``e_b``.

Christoffel symbols then follow from expressing ``d_i = C[i, a] e_a`` with
``C`` the inverse frame matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from . import jet as _jet
from .geom import (
    DEFAULT_SAMPLES,
    Chart,
    ChartMismatchError,
    Connection,
    Map,
    TwoForm,
    VectorField,
    as_points,
    bracket,
    check_inverse,
    curvature_tensor,
    exterior_derivative,
    pullback,
    pushforward,
)
from .jet import Jet, SingularJetError
from .report import VerificationReport


class StructureError(ValueError):
    pass


class DegenerateStructureError(StructureError):
    """A sample point where the frames are (numerically) not transversal."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


@dataclass(frozen=True)
class Tolerances:
    closed: float = 1e-9
    nondegenerate: float = 1e-10
    lagrangian: float = 1e-9
    transversal: float = 1e-8
    independent: float = 1e-8
    involutive: float = 1e-8
    hess: float = 1e-7
    affine: float = 1e-6
    para_kahler: float = 1e-9
    inverse: float = 1e-8
    perturbation: float = 1e-3
    uniqueness: float = 1e-4
    lift: float = 1e-9
    # circle maps and torus flows
    limit_gap: float = 1e-6
    equivariance: float = 1e-4
    exponent: float = 0.1  # relative
    rho_slack: float = 1e-6

    @classmethod
    def keys(cls) -> tuple:
        return tuple(f.name for f in fields(cls))

    def override(self, values: Mapping[str, float] | None) -> "Tolerances":
        if not values:
            return self
        unknown = set(values) - set(self.keys())
        if unknown:
            raise KeyError(f"unknown tolerance key(s): {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in values.items()})


DEFAULT_TOL = Tolerances()


# foliations ----------------------------------------------------------------------------


class Foliation:
    """A distribution given by a pointwise independent frame of vector fields."""

    def __init__(self, chart: Chart, frame: Sequence[VectorField], name: str = "F"):
        frame = tuple(frame)
        if not frame:
            raise StructureError(f"foliation {name!r} needs at least one frame field")
        for X in frame:
            if X.chart != chart:
                raise ChartMismatchError(f"frame field of {name!r} lives on another chart")
        self.chart = chart
        self.frame = frame
        self.name = name

    @classmethod
    def coordinate(cls, chart: Chart, names: Sequence[str], name: str = "F") -> "Foliation":
        return cls(chart, [VectorField.coordinate(chart, c) for c in names], name)

    @property
    def rank(self) -> int:
        return len(self.frame)

    def frame_jet(self, points, order: int = 0) -> Jet:
        p = as_points(self.chart, points)
        return Jet.stack([X._fn(p, order) for X in self.frame], axis=1)

    def frame_matrix(self, points) -> np.ndarray:
        return self.frame_jet(points, 0).value

    def adapted_indices(self) -> tuple | None:
        """Coordinate indices if every frame field is a coordinate field, else ``None``."""
        from .expr import Num

        out = []
        for X in self.frame:
            if X.exprs is None:
                return None
            vals = [e.value if isinstance(e, Num) else None for e in X.exprs]
            if any(v is None for v in vals) or sorted(vals) != [0.0] * (len(vals) - 1) + [1.0]:
                return None
            out.append(vals.index(1.0))
        return tuple(out)

    def check_independent(self, points, tol: float = DEFAULT_TOL.independent) -> VerificationReport:
        rep = VerificationReport(f"independence of {self.name}")
        s = np.linalg.svd(self.frame_matrix(points), compute_uv=False)[..., -1]
        rep.add_min("frame smallest singular value", s, tol, as_points(self.chart, points),
                    operation="Foliation.independent")
        return rep

    def involutivity_residuals(self, points) -> np.ndarray:
        p = as_points(self.chart, points)
        E = self.frame_matrix(p)  # (N, k, m)
        proj = np.linalg.pinv(E) @ E  # (N, m, m) projector onto the row span
        res = np.zeros(len(p))
        for a in range(self.rank):
            for b in range(a + 1, self.rank):
                br = bracket(self.frame[a], self.frame[b]).jet(p, 0).value
                r = br - np.einsum("nkm,nk->nm", proj, br)
                res = np.maximum(res, np.max(np.abs(r), axis=1))
        return res

    def check_involutive(self, points, tol: float = DEFAULT_TOL.involutive) -> VerificationReport:
        rep = VerificationReport(f"involutivity of {self.name}")
        rep.add_max("bracket residual off the span", self.involutivity_residuals(points), tol,
                    as_points(self.chart, points), operation="Foliation.involutive")
        return rep

    def verify(self, points, tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
        rep = VerificationReport(f"foliation {self.name}")
        rep.section(self.check_independent(points, tol.independent))
        rep.section(self.check_involutive(points, tol.involutive))
        return rep


# structure-level checks ------------------------------------------------------------------


def check_symplectic(omega: TwoForm, points, tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    """Closedness (max ``|d omega|``) and non-degeneracy (min ``|det omega|``)."""
    if omega.chart.dim % 2:
        raise StructureError(f"symplectic form needs an even-dimensional chart, got {omega.chart.dim}")
    p = as_points(omega.chart, points)
    rep = VerificationReport("symplectic")
    d = exterior_derivative(omega).components(p)
    rep.add_max("d omega", d, tol.closed, p, operation="check_symplectic")
    det = np.abs(np.linalg.det(omega.components(p)))
    rep.add_min("|det omega|", det, tol.nondegenerate, p, operation="check_symplectic")
    return rep


def check_lagrangian(omega: TwoForm, F: Foliation, points, tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    if omega.chart != F.chart:
        raise ChartMismatchError("form and foliation live on different charts")
    if 2 * F.rank != omega.chart.dim:
        raise StructureError(f"{F.name} has rank {F.rank}, Lagrangian needs {omega.chart.dim // 2}")
    p = as_points(omega.chart, points)
    E = F.frame_matrix(p)
    vals = np.einsum("nai,nij,nbj->nab", E, omega.components(p), E)
    rep = VerificationReport(f"Lagrangian {F.name}")
    rep.add_max(f"omega on {F.name} frame", vals, tol.lagrangian, p, operation="check_lagrangian")
    return rep


def transversality_values(F1: Foliation, F2: Foliation, points) -> np.ndarray:
    p = as_points(F1.chart, points)
    E = np.concatenate([F1.frame_matrix(p), F2.frame_matrix(p)], axis=1)
    return np.linalg.svd(E, compute_uv=False)[..., -1]


def check_transversal(F1: Foliation, F2: Foliation, points, tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    if F1.chart != F2.chart:
        raise ChartMismatchError("foliations live on different charts")
    if F1.rank + F2.rank != F1.chart.dim:
        raise StructureError(f"ranks {F1.rank} + {F2.rank} do not add up to {F1.chart.dim}")
    p = as_points(F1.chart, points)
    rep = VerificationReport(f"transversal {F1.name}, {F2.name}")
    rep.add_min("smallest singular value of joint frame", transversality_values(F1, F2, p), tol.transversal, p,
                operation="check_transversal")
    return rep


# bi-Lagrangian structures ------------------------------------------------------------------


class BiLagrangianStructure:
    """``(omega, F1, F2)`` on a single chart."""

    def __init__(self, chart: Chart, omega: TwoForm, F1: Foliation, F2: Foliation, name: str = "S",
                 tol: Tolerances = DEFAULT_TOL):
        for obj in (omega, F1, F2):
            if obj.chart != chart:
                raise ChartMismatchError(f"component of structure {name!r} lives on another chart")
        if chart.dim % 2:
            raise StructureError("bi-Lagrangian structures need an even dimension")
        if F1.rank != chart.dim // 2 or F2.rank != chart.dim // 2:
            raise StructureError("both foliations must have half the chart dimension")
        self.chart = chart
        self.omega = omega
        self.F1 = F1
        self.F2 = F2
        self.name = name
        self.tol = tol

    @property
    def n(self) -> int:
        return self.chart.dim // 2

    def samples(self, n: int = DEFAULT_SAMPLES, seed: int = 0) -> np.ndarray:
        return self.chart.samples(n, seed)

    def frame_jet(self, points, order: int) -> Jet:
        """Rows ``e_a``: the ``F1`` frame followed by the ``F2`` frame."""
        p = as_points(self.chart, points)
        return Jet.stack([X._fn(p, order) for X in self.F1.frame + self.F2.frame], axis=1)

    def verify(self, points=None, tol: Tolerances | None = None) -> VerificationReport:
        """All structure checks: symplectic, both Lagrangian, transversal, frames, involutivity."""
        tol = tol or self.tol
        p = self.samples() if points is None else as_points(self.chart, points)
        rep = VerificationReport(f"bi-Lagrangian structure {self.name}")
        rep.section(check_symplectic(self.omega, p, tol))
        rep.section(check_lagrangian(self.omega, self.F1, p, tol))
        rep.section(check_lagrangian(self.omega, self.F2, p, tol))
        rep.section(check_transversal(self.F1, self.F2, p, tol))
        rep.section(self.F1.verify(p, tol))
        rep.section(self.F2.verify(p, tol))
        return rep

    @cached_property
    def hess(self) -> Connection:
        return hess_connection(self)


def _frame_data(S: BiLagrangianStructure, p: np.ndarray, order: int):
    E = S.frame_jet(p, order)
    s = np.linalg.svd(E.value, compute_uv=False)
    bad = s[..., -1] < S.tol.transversal
    if np.any(bad):
        k = int(np.argmax(bad))
        raise DegenerateStructureError(
            f"structure {S.name!r}: frames not transversal at {p[k].tolist()} "
            f"(smallest singular value {s[k, -1]:.3e})", p[k])
    return E


def _hess_jets(S: BiLagrangianStructure, p: np.ndarray, r: int) -> Jet:
    n = S.n
    m = S.chart.dim
    i1, i2 = slice(0, n), slice(n, m)
    E1 = _frame_data(S, p, r + 1)  # (N, a, k)
    W1 = S.omega._fn(p, r + 1)  # (N, k, l)
    E = E1.truncate(r)
    try:
        C1 = _jet.inv(E1)  # (N, k, a): d_k = C[k, a] e_a
    except SingularJetError as exc:
        raise DegenerateStructureError(f"structure {S.name!r}: {exc}") from None
    C = C1.truncate(r)

    # frame pairing Omega[a, b] = omega(e_a, e_b) and its derivatives along the frame
    EW1 = _jet.einsum("...ak,...kl->...al", E1, W1)
    Om1 = _jet.einsum("...al,...bl->...ab", EW1, E1)
    dOm = Om1.gradient()  # [b, c, k]
    e_dOm = _jet.einsum("...ak,...bck->...abc", E, dOm)

    dE = E1.gradient()  # [c, k, i] = d_i e_c^k
    t = _jet.einsum("...ai,...cki->...ack", E, dE)
    Br = t - t.transpose(0, 2, 1, 3)  # [a, c, k] = [e_a, e_c]^k
    wBr = _jet.einsum("...bl,...acl->...abc", EW1.truncate(r), Br)
    rhs = e_dOm - wBr  # [a, b, c]

    coef = np.zeros(E.shape[:1] + (m, m, m, E.space.size))
    # same foliation: coefficients d in the foliation of b, tested against the opposite frame c
    for bi, ci in ((i1, i2), (i2, i1)):
        P = Om1.truncate(r)[:, bi, ci]  # (N, d, c)
        Pinv = _jet.inv(P)  # (N, c, d)
        sol = _jet.einsum("...abc,...cd->...abd", rhs[:, bi, bi, ci], Pinv)
        coef[:, bi, bi, bi] = sol.c
    # mixed: component of the bracket along the foliation of b
    beta = _jet.einsum("...abk,...kd->...abd", Br, C)
    coef[:, i2, i1, i1] = beta.c[:, i2, i1, i1]
    coef[:, i1, i2, i2] = beta.c[:, i1, i2, i2]
    N_ = _jet.einsum("...abd,...dk->...abk", Jet(E.space, coef), E)

    dC = C1.gradient()  # [j, b, i] = d_i C[j, b]
    term1 = _jet.einsum("...jbi,...bk->...kij", dC, E)
    CN = _jet.einsum("...ia,...abk->...ibk", C, N_)
    term2 = _jet.einsum("...jb,...ibk->...kij", C, CN)
    return term1 + term2


def hess_connection(S: BiLagrangianStructure) -> Connection:
    """The Hess connection of ``S`` as a jet-evaluable :class:`Connection`."""
    return Connection(S.chart, lambda p, r: _hess_jets(S, p, r), name=f"hess({S.name})")


# Hess defining residuals ---------------------------------------------------------------


@dataclass
class _HessData:
    W: np.ndarray  # (N, j, k)
    dW: np.ndarray  # (N, j, k, i) = d_i omega_jk
    E: np.ndarray  # (N, b, k)
    dE: np.ndarray  # (N, b, k, i)
    C: np.ndarray  # (N, k, a)
    n: int


def _hess_data(S: BiLagrangianStructure, p) -> _HessData:
    W = S.omega._fn(p, 1)
    E = S.frame_jet(p, 1)
    return _HessData(W.value, W.gradient().value, E.value, E.gradient().value, np.linalg.inv(E.value), S.n)


def _residuals(G: np.ndarray, d: _HessData) -> dict:
    """Per-sample max residuals of the three defining properties for Christoffels ``G``."""
    tors = G - np.swapaxes(G, -1, -2)
    # (nabla_i omega)_{jk} = d_i w_jk - G^l_ij w_lk - G^l_ik w_jl
    nw = (np.einsum("njki->nijk", d.dW)
          - np.einsum("nlij,nlk->nijk", G, d.W)
          - np.einsum("nlik,njl->nijk", G, d.W))
    # nabla_{d_i} e_b = d_i e_b + G^k_ij e_b^j, expressed in the frame
    v = np.einsum("nbki->nibk", d.dE) + np.einsum("nkij,nbj->nibk", G, d.E)
    coef = np.einsum("nibk,nka->niba", v, d.C)
    n = d.n
    pres = np.concatenate([coef[:, :, :n, n:].reshape(len(G), -1), coef[:, :, n:, :n].reshape(len(G), -1)], axis=1)
    flat = lambda a: np.max(np.abs(a.reshape(len(G), -1)), axis=1)
    return {"torsion": flat(tors), "nabla omega": flat(nw), "foliation preservation": flat(pres)}


def _uniqueness_probe(G: np.ndarray, d: _HessData, eps: float):
    """Smallest residual over all single-symbol perturbations ``Gamma^k_ij += eps``.

    The residuals are affine in ``Gamma``, so each perturbation only touches a
    few slices; those are recomputed exactly and combined with the unperturbed
    maximum elsewhere.
    """
    m = G.shape[-1]
    n = d.n
    tors = G - np.swapaxes(G, -1, -2)
    nw = (np.einsum("njki->nijk", d.dW)
          - np.einsum("nlij,nlk->nijk", G, d.W)
          - np.einsum("nlik,njl->nijk", G, d.W))
    v = np.einsum("nbki->nibk", d.dE) + np.einsum("nkij,nbj->nibk", G, d.E)
    coef = np.einsum("nibk,nka->niba", v, d.C)
    mask = np.zeros((m, m), dtype=bool)
    mask[:n, n:] = True
    mask[n:, :n] = True
    base = max(np.max(np.abs(tors)), np.max(np.abs(nw)), np.max(np.abs(coef[:, :, mask])))
    worst, worst_idx = np.inf, None
    for k in range(m):
        for i in range(m):
            for j in range(m):
                t = 0.0 if i == j else eps
                a = nw[:, i].copy()
                a[:, j, :] -= eps * d.W[:, k, :]
                a[:, :, j] -= eps * d.W[:, :, k]
                c = coef[:, i] + eps * np.einsum("nb,na->nba", d.E[:, :, j], d.C[:, k, :])
                r = max(t, np.max(np.abs(a)), np.max(np.abs(c[:, mask])), base)
                if r < worst:
                    worst, worst_idx = r, (k, i, j)
    return worst, worst_idx


def check_hess(S: BiLagrangianStructure, conn: Connection | None = None, points=None,
               tol: Tolerances | None = None, *, uniqueness: bool = True) -> VerificationReport:
    """Torsion, parallel ``omega`` and preservation of both foliations; optional uniqueness probe."""
    tol = tol or S.tol
    conn = conn or S.hess
    p = S.samples() if points is None else as_points(S.chart, points)
    rep = VerificationReport(f"Hess connection of {S.name}")
    G = conn.christoffel(p, 0).value
    d = _hess_data(S, p)
    res = _residuals(G, d)
    for name, vals in res.items():
        rep.add_max(name, vals, tol.hess, p, operation="hess_connection")
    if uniqueness:
        worst, worst_idx = _uniqueness_probe(G, d, tol.perturbation)
        rep.add("uniqueness: weakest perturbation breaks residual by", worst, tol.uniqueness, comparator=">=",
                samples=len(p), operation="hess_connection",
                detail=f"perturbation {tol.perturbation:g} of Gamma^{worst_idx[0]}_{worst_idx[1]}{worst_idx[2]}")
    rep.data["christoffel_max"] = float(np.max(np.abs(G))) if G.size else 0.0
    return rep


def check_affine(S: BiLagrangianStructure, points=None, tol: float | None = None,
                 conn: Connection | None = None) -> VerificationReport:
    """Flatness of the Hess connection: max ``|R^l_kij|`` over samples."""
    tol = S.tol.affine if tol is None else tol
    p = S.samples() if points is None else as_points(S.chart, points)
    R = curvature_tensor(conn or S.hess, p)
    rep = VerificationReport(f"affine {S.name}")
    rep.add_max("curvature", R, tol, p, operation="check_affine")
    return rep


# para-Kaehler -------------------------------------------------------------------------------


@dataclass
class ParaKahlerPair:
    """``F`` = +id on ``F1``, -id on ``F2``; ``G(X, Y) = omega(FX, Y)``."""

    structure: BiLagrangianStructure

    def F(self, points) -> np.ndarray:
        S = self.structure
        Ecol = np.swapaxes(S.frame_jet(points, 0).value, -1, -2)
        D = np.diag([1.0] * S.n + [-1.0] * S.n)
        return Ecol @ D @ np.linalg.inv(Ecol)

    def G(self, points) -> np.ndarray:
        F = self.F(points)
        return np.swapaxes(F, -1, -2) @ self.structure.omega.components(points)

    def F_in_frame(self, points) -> np.ndarray:
        S = self.structure
        E = S.frame_jet(points, 0).value
        Ecol = np.swapaxes(E, -1, -2)
        return np.linalg.inv(Ecol) @ self.F(points) @ Ecol

    def verify(self, points=None, tol: Tolerances | None = None) -> VerificationReport:
        S = self.structure
        tol = tol or S.tol
        p = S.samples() if points is None else as_points(S.chart, points)
        F, G, W = self.F(p), self.G(p), S.omega.components(p)
        Ft = np.swapaxes(F, -1, -2)
        eye = np.eye(S.chart.dim)
        rep = VerificationReport(f"para-Kaehler pair of {S.name}")
        rep.note("sign convention: F = +id on F1, -id on F2")
        rep.add_max("F^2 - id", F @ F - eye, tol.para_kahler, p, operation="para_kahler")
        rep.add_max("G - G^T", G - np.swapaxes(G, -1, -2), tol.para_kahler, p, operation="para_kahler")
        rep.add_max("G(FX,FY) + G(X,Y)", Ft @ G @ F + G, tol.para_kahler, p, operation="para_kahler")
        rep.add_max("omega(X,Y) - G(FX,Y)", W - Ft @ G, tol.para_kahler, p, operation="para_kahler")
        return rep


def para_kahler(S: BiLagrangianStructure) -> ParaKahlerPair:
    return ParaKahlerPair(S)


# push-forward of structures ---------------------------------------------------------------


def pushforward_structure(phi: Map, phi_inv: Map, S: BiLagrangianStructure, *, points=None,
                          name: str | None = None) -> BiLagrangianStructure:
    """``((phi^-1)^* omega, phi_* F1, phi_* F2)`` on ``phi.target``.

    The inverse pair is verified on target samples before anything is built.
    """
    if phi.source != S.chart:
        raise ChartMismatchError("map source differs from the structure chart")
    target = phi.target
    pts = target.samples() if points is None else as_points(target, points)
    check_inverse(phi, phi_inv, pts, S.tol.inverse)
    check_inverse(phi_inv, phi, phi_inv(pts), S.tol.inverse)
    omega = pullback(phi_inv, S.omega)
    F1 = Foliation(target, [pushforward(phi, phi_inv, X) for X in S.F1.frame], S.F1.name)
    F2 = Foliation(target, [pushforward(phi, phi_inv, X) for X in S.F2.frame], S.F2.name)
    return BiLagrangianStructure(target, omega, F1, F2, name or f"{phi.name or 'phi'}_*{S.name}", S.tol)


def darboux(n: int = 1, box=None, name: str = "darboux") -> BiLagrangianStructure:
    """``sum dq^i ^ dp^i`` with ``F1 = span d/dp``, ``F2 = span d/dq`` on ``(p^1..p^n, q^1..q^n)``."""
    ps = [f"p{i + 1}" for i in range(n)] if n > 1 else ["p"]
    qs = [f"q{i + 1}" for i in range(n)] if n > 1 else ["q"]
    chart = Chart(name, tuple(ps + qs), box)
    omega = TwoForm.from_exprs(chart, {(q, p): "1" for p, q in zip(ps, qs)})
    return BiLagrangianStructure(chart, omega, Foliation.coordinate(chart, ps, "F1"),
                                 Foliation.coordinate(chart, qs, "F2"), name)
