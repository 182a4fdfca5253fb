"""Vector fields on the 2-torus, their singularities and flows.

The torus is ``R^2 / Z^2`` with coordinates ``(x, y)``.  Fields are given by
1-periodic component expressions (or as push-forwards of such fields) and are
integrated in the universal cover.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..expr import compile_expr, parse, to_source
from ..geom import Chart, Map, VectorField, check_inverse
from ..jet import Jet, jet_space
from ..report import VerificationReport
from . import integrate as _int

TORUS = Chart("T2", ("x", "y"), ((0.0, 1.0), (0.0, 1.0)))

PERIODICITY_TOL = 1e-9
NEWTON_GRID = 64
MERGE_TOL = 1e-6
ZERO_TOL = 1e-10
HYPERBOLIC_TOL = 1e-9


class PeriodicityError(ValueError):
    pass


def torus_grid(n: int, offset: float = 0.0) -> np.ndarray:
    g = (np.arange(n) + offset) / n
    X, Y = np.meshgrid(g, g, indexing="ij")
    return np.stack([X.ravel(), Y.ravel()], axis=1)


def torus_delta(P, Q) -> np.ndarray:
    """Componentwise difference reduced to ``[-1/2, 1/2)``."""
    return np.mod(np.asarray(P) - np.asarray(Q) + 0.5, 1.0) - 0.5


class TorusVectorField:
    """A vector field on the torus.

    ``field`` is a :class:`VectorField` on :data:`TORUS` whose components are
    1-periodic; ``fast`` optionally evaluates it on a batch of points without
    jets (used by the integrator).
    """

    def __init__(self, field: VectorField, name: str = "X", fast: Callable | None = None, params=None):
        if field.chart != TORUS:
            raise ValueError("torus fields live on the T2 chart")
        self.field = field
        self.name = name
        self._fast = fast
        self.params = dict(params or {})

    @classmethod
    def from_exprs(cls, xdot, ydot, name: str = "X", *, check: bool = True, params=None) -> "TorusVectorField":
        X = cls(VectorField.from_exprs(TORUS, [parse(xdot), parse(ydot)]), name, params=params)
        if check:
            X.check_periodic()
        return X

    @property
    def exprs(self):
        return self.field.exprs

    def __call__(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=float).reshape(-1, 2)
        if self._fast is not None:
            return self._fast(P)
        return self.field(P)

    def jacobian(self, P) -> np.ndarray:
        """``J[n, i, j] = d_j X^i``."""
        return self.field.jet(np.asarray(P, dtype=float).reshape(-1, 2), 1).gradient().value

    def periodicity_residual(self, n: int = 32) -> float:
        P = torus_grid(n)
        v = self(P)
        r = max(np.max(np.abs(self(P + [1.0, 0.0]) - v)), np.max(np.abs(self(P + [0.0, 1.0]) - v)))
        return float(r)

    def check_periodic(self, tol: float = PERIODICITY_TOL) -> float:
        r = self.periodicity_residual()
        if not r <= tol:
            raise PeriodicityError(f"field {self.name!r} is not 1-periodic: residual {r:.3e} > {tol:g}")
        return r

    def source(self) -> tuple:
        if self.exprs is None:
            raise ValueError("field has no expression form")
        return tuple(to_source(e) for e in self.exprs)


# singularities ----------------------------------------------------------------------------


@dataclass
class SingularityInfo:
    location: np.ndarray
    eigenvalues: np.ndarray
    kind: str
    residual: float

    def to_dict(self) -> dict:
        ev = np.asarray(self.eigenvalues)
        return {
            "location": [float(v) for v in self.location],
            "eigenvalues_real": [float(v) for v in ev.real],
            "eigenvalues_imag": [float(v) for v in ev.imag],
            "class": self.kind,
            "residual": float(self.residual),
        }


def classify(eigenvalues, tol: float = HYPERBOLIC_TOL) -> str:
    re = np.real(eigenvalues)
    if np.any(np.abs(re) <= tol):
        return "non-hyperbolic"
    if np.all(re < 0):
        return "hyperbolic-sink"
    if np.all(re > 0):
        return "hyperbolic-source"
    return "hyperbolic-saddle"


def find_singularities(X: TorusVectorField, grid: int = NEWTON_GRID, iters: int = 60,
                       merge_tol: float = MERGE_TOL) -> tuple:
    """Zeros of ``X`` by Newton's method from a ``grid x grid`` seed lattice.

    Returns ``(singularities, failures)`` where ``failures`` counts seeds that
    did not converge (these are not errors).
    """
    P = torus_grid(grid, 0.5)
    for _ in range(iters):
        v = X(P)
        J = X.jacobian(P)
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        good = np.abs(det) > 1e-300
        step = np.zeros_like(P)
        step[good, 0] = (J[good, 1, 1] * v[good, 0] - J[good, 0, 1] * v[good, 1]) / det[good]
        step[good, 1] = (-J[good, 1, 0] * v[good, 0] + J[good, 0, 0] * v[good, 1]) / det[good]
        # damp long jumps; zeros of interest are resolved by the seed grid
        norm = np.hypot(step[:, 0], step[:, 1])
        step *= np.minimum(1.0, 0.25 / np.maximum(norm, 1e-300))[:, None]
        P = P - step
    P = np.mod(P, 1.0)
    v = X(P)
    res = np.hypot(v[:, 0], v[:, 1])
    conv = res <= ZERO_TOL
    found: list = []
    for p, r in zip(P[conv], res[conv]):
        if any(np.max(np.abs(torus_delta(p, q.location))) <= merge_tol for q in found):
            continue
        ev = np.linalg.eigvals(X.jacobian(p)[0])
        found.append(SingularityInfo(p, ev, classify(ev), float(r)))
    found.sort(key=lambda s: (round(float(s.location[1]), 9), round(float(s.location[0]), 9)))
    return found, int(np.count_nonzero(~conv))


def validate_cherry(X: TorusVectorField) -> VerificationReport:
    """Exactly one hyperbolic sink and one hyperbolic saddle; closed orbits are not decided."""
    rep = VerificationReport(f"Cherry field {X.name}")
    rep.add("periodicity residual", X.periodicity_residual(), PERIODICITY_TOL, samples=32 * 32,
            operation="validate_cherry")
    sings, failures = find_singularities(X)
    kinds = sorted(s.kind for s in sings)
    rep.add("singularity count", len(sings), 2, comparator="<=", operation="validate_cherry")
    rep.add("singularity count (lower)", len(sings), 2, comparator=">=", operation="validate_cherry")
    ok = kinds == ["hyperbolic-saddle", "hyperbolic-sink"]
    rep.add("one hyperbolic sink and one hyperbolic saddle", 0.0 if ok else 1.0, 0.0, operation="validate_cherry",
            detail=", ".join(kinds) or "no singularities")
    for s in sings:
        rep.add(f"|X| at {s.kind}", s.residual, ZERO_TOL, worst_point=s.location, operation="find_singularities")
    rep.note("closed-orbit-free: assumed")
    rep.data["singularities"] = [s.to_dict() for s in sings]
    rep.data["newton_failures"] = failures
    return rep


def sink_and_saddle(X: TorusVectorField):
    sings, _ = find_singularities(X)
    sinks = [s for s in sings if s.kind == "hyperbolic-sink"]
    saddles = [s for s in sings if s.kind == "hyperbolic-saddle"]
    return sinks, saddles


# the shipped Cherry family ------------------------------------------------------------------------


CHERRY_DEFAULTS = {"alpha": 0.3, "x0": 0.5, "y0": 0.5, "sigma": 0.1, "beta": 1.5, "k": 30.0}


def cherry_exprs(alpha=0.3, x0=0.5, y0=0.5, sigma=0.1, beta=1.5, k=30.0) -> tuple:
    """Component sources of the Cherry family member with the given parameters.

    The constant field ``(alpha, 1)`` is modified by a periodic bump
    ``b = exp(-(sin^2(pi(x-x0)) + sin^2(pi(y-y0))) / (pi sigma)^2)`` centred at
    ``(x0, y0)``:

        xdot = alpha - k b sin(2 pi (x - x0)) / (2 pi)
        ydot = 1 - beta b

    For ``beta > 1`` the level set ``b = 1/beta`` is a small closed curve and
    the zeros of ``xdot`` on it are a saddle (upper) and a sink (lower).
    """
    b = (f"exp(-(sin(pi*(x - {x0!r}))^2 + sin(pi*(y - {y0!r}))^2) / (pi*{sigma!r})^2)")
    xdot = f"{alpha!r} - {k!r}*{b}*sin(2*pi*(x - {x0!r}))/(2*pi)"
    ydot = f"1 - {beta!r}*{b}"
    return xdot, ydot


def cherry_field(name: str = "cherry", validate: bool = True, **params) -> TorusVectorField:
    unknown = set(params) - set(CHERRY_DEFAULTS)
    if unknown:
        raise KeyError(f"unknown Cherry parameter(s): {sorted(unknown)}")
    p = dict(CHERRY_DEFAULTS, **{k: float(v) for k, v in params.items()})
    X = TorusVectorField.from_exprs(*cherry_exprs(**p), name=name, params=p)
    if validate:
        rep = validate_cherry(X)
        if not rep.passed:
            raise ValueError(f"Cherry family member {name!r} rejected:\n{rep.summary()}")
    return X


def linear_field(alpha: float, name: str = "linear") -> TorusVectorField:
    return TorusVectorField.from_exprs(repr(float(alpha)), "1", name=name, params={"alpha": alpha})


# flows ------------------------------------------------------------------------------------------


def flow_batch(X: TorusVectorField, P, *, t: float | None = None, until: float | None = None,
               tmax: float = _int.T_MAX, sinks: Sequence | None = None, **kw) -> _int.FlowResult:
    """Integrate many points at once.  ``until`` is the cover height ``c`` to reach.

    In section mode sinks default to the sinks of ``X``.
    """
    if until is not None and sinks is None:
        sinks = [s.location for s in sink_and_saddle(X)[0]]
    return _int.integrate(X, P, t_end=t, section=until, t_max=tmax, sinks=sinks or (), **kw)


def flow(X: TorusVectorField, p, *, t: float | None = None, until: float | None = None,
         tmax: float = _int.T_MAX, sinks=None, **kw):
    """Single-point flow returning ``(point mod 1, elapsed time)``.

    Raises :class:`CapturedError` when a section is not reached (sink capture
    or ``tmax``), :class:`StepUnderflowError` on step-size underflow.
    """
    res = flow_batch(X, np.asarray(p, dtype=float).reshape(1, 2), t=t, until=until, tmax=tmax, sinks=sinks, **kw)
    s = int(res.status[0])
    if s in (_int.CAPTURED, _int.TMAX):
        raise _int.CapturedError(f"trajectory from {list(np.ravel(p))} {_int.STATUS_NAMES[s]} "
                                 f"after t={res.times[0]:.6g}")
    if s == _int.UNDERFLOW:
        raise _int.StepUnderflowError(f"step-size underflow from {list(np.ravel(p))} at t={res.times[0]:.6g}")
    return np.mod(res.points[0], 1.0), float(res.times[0])


# torus diffeomorphisms --------------------------------------------------------------------------


class TorusDiffeo:
    """A lifted torus diffeomorphism with its inverse, both as expression maps on the cover."""

    def __init__(self, phi: Map, phi_inv: Map, name: str = "phi", tol: float = 1e-7):
        if phi.source != TORUS or phi.target != TORUS:
            raise ValueError("torus diffeomorphisms map T2 to T2")
        self.phi = phi
        self.phi_inv = phi_inv
        self.name = name
        self.check(tol)

    @classmethod
    def from_exprs(cls, components, inverse, name: str = "phi", tol: float = 1e-7) -> "TorusDiffeo":
        return cls(Map.from_exprs(TORUS, TORUS, components, name), Map.from_exprs(TORUS, TORUS, inverse, name + "^-1"),
                   name, tol)

    def check(self, tol: float = 1e-7) -> None:
        P = torus_grid(32)
        for f in (self.phi, self.phi_inv):
            base = f(P)
            for e in ([1.0, 0.0], [0.0, 1.0]):
                d = f(P + e) - base
                if np.max(np.abs(d - np.round(d))) > tol:
                    raise PeriodicityError(f"{f.name or self.name} is not compatible with the torus lattice")
        check_inverse(self.phi, self.phi_inv, P, tol, modulus=1.0)
        check_inverse(self.phi_inv, self.phi, P, tol, modulus=1.0)

    def __call__(self, P) -> np.ndarray:
        return self.phi(np.asarray(P, dtype=float).reshape(-1, 2))

    def inverse(self, P) -> np.ndarray:
        return self.phi_inv(np.asarray(P, dtype=float).reshape(-1, 2))

    def preserves_sections(self, tol: float = 1e-9) -> bool:
        """``phi(x, y) = (h(x), y)``: horizontal circles are mapped to themselves."""
        P = torus_grid(32)
        Q = self(P)
        J = self.phi.jacobian(P)
        return bool(np.max(np.abs(Q[:, 1] - P[:, 1])) <= tol and np.max(np.abs(J[:, 0, 1])) <= tol)


def pushforward_torus_field(D: TorusDiffeo, X: TorusVectorField, name: str | None = None) -> TorusVectorField:
    """``(phi_* X)(p) = D phi(phi^-1 p) . X(phi^-1 p)``."""
    from ..geom import pushforward

    field_ = pushforward(D.phi, D.phi_inv, X.field)

    def fast(P):
        Q = D.inverse(P)
        J = D.phi.jacobian(Q)
        return np.einsum("nij,nj->ni", J, X(Q))

    Y = TorusVectorField(field_, name or f"{D.name}_*{X.name}", fast=fast)
    Y.check_periodic(1e-7)
    return Y
