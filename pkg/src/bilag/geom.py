"""Charts, tensor fields in coordinates and their differential calculus.

Every field is a function ``points -> Jet``: given a batch of points with
shape ``(N, m)`` and a jet order it returns the Taylor jets of its components
at those points.  Fields built from expressions evaluate their expression
trees on jets; derived fields (brackets, covariant derivatives, lifts,
push-forwards) are closures that ask their inputs for one extra order and
differentiate the jets.  Nothing is differentiated symbolically.

Index conventions: a vector field jet has shape ``(N, m)``; a ``k``-form jet
has ``k`` trailing axes of length ``m`` holding the fully antisymmetric
components; a connection jet has shape ``(N, m, m, m)`` with
``gamma[..., k, i, j]`` the component ``k`` of ``nabla_{d_i} d_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.stats import qmc

from . import jet as _jet
from .expr import Expr, check_bound, compile_expr, eval_jet, parse
from .jet import Jet, jet_space

DEFAULT_SAMPLES = 100


class ChartMismatchError(ValueError):
    pass


class InverseMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Chart:
    """A coordinate chart: ordered coordinate names and a sampling box."""

    name: str
    coords: tuple
    box: tuple = field(default=None, compare=False)

    def __post_init__(self):
        coords = tuple(self.coords)
        if not coords:
            raise ValueError("a chart needs at least one coordinate")
        if len(set(coords)) != len(coords):
            raise ValueError(f"duplicate coordinate names in chart {self.name!r}")
        object.__setattr__(self, "coords", coords)
        box = self.box
        if box is None:
            box = tuple((-1.0, 1.0) for _ in coords)
        elif isinstance(box, Mapping):
            box = tuple(tuple(map(float, box.get(c, (-1.0, 1.0)))) for c in coords)
        else:
            box = tuple(tuple(map(float, b)) for b in box)
        if len(box) != len(coords) or any(lo > hi for lo, hi in box):
            raise ValueError(f"bad sampling box for chart {self.name!r}")
        object.__setattr__(self, "box", box)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def index(self, name: str) -> int:
        try:
            return self.coords.index(name)
        except ValueError:
            raise KeyError(f"{name!r} is not a coordinate of chart {self.name!r}") from None

    def samples(self, n: int = DEFAULT_SAMPLES, seed: int = 0) -> np.ndarray:
        """Deterministic low-discrepancy points in the box (scrambled Halton)."""
        return sample_box(self.box, n, seed)


def sample_box(box, n: int, seed: int) -> np.ndarray:
    box = np.asarray(box, dtype=float)
    u = qmc.Halton(d=len(box), scramble=True, seed=np.random.default_rng(seed)).random(n)
    return box[:, 0] + u * (box[:, 1] - box[:, 0])


def as_points(chart: Chart, points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    if p.ndim == 1:
        p = p[None, :]
    if p.ndim != 2 or p.shape[1] != chart.dim:
        raise ValueError(f"points must have shape (N, {chart.dim}) for chart {chart.name!r}")
    return p


def _same_chart(*objs):
    c = objs[0].chart
    for o in objs[1:]:
        if o.chart != c:
            raise ChartMismatchError(f"chart mismatch: {c.name!r} vs {o.chart.name!r}")
    return c


def coordinate_jets(chart: Chart, points, order: int) -> Jet:
    return Jet.variables(jet_space(chart.dim, order), as_points(chart, points))


def _expr_jets(chart: Chart, exprs, points, order: int) -> Jet:
    """Jets of several expressions, stacked along a new trailing axis."""
    p = as_points(chart, points)
    space = jet_space(chart.dim, order)
    xs = Jet.variables(space, p)
    from .expr import _jet_eval

    env = {name: xs[..., i] for i, name in enumerate(chart.coords)}
    out = []
    for e in exprs:
        out.append(_jet_eval(e, env, space).broadcast_to(p.shape[:1]))
    return Jet(space, np.stack([o.c for o in out], axis=1))


# fields ------------------------------------------------------------------------------


class ScalarField:
    """A smooth function on a chart."""

    def __init__(self, chart: Chart, fn: Callable[[np.ndarray, int], Jet], expr: Expr | None = None):
        self.chart = chart
        self._fn = fn
        self.expr = expr

    @classmethod
    def from_expr(cls, chart: Chart, e) -> "ScalarField":
        e = parse(e)
        check_bound(e, chart.coords)
        return cls(chart, lambda p, r: _expr_jets(chart, [e], p, r)[:, 0], expr=e)

    @classmethod
    def constant(cls, chart: Chart, value: float) -> "ScalarField":
        def fn(p, r):
            return Jet.constant(jet_space(chart.dim, r), np.full(len(p), float(value)))

        return cls(chart, fn)

    def jet(self, points, order: int = 0) -> Jet:
        return self._fn(as_points(self.chart, points), order)

    def __call__(self, points) -> np.ndarray:
        return self.jet(points, 0).value

    def _binary(self, other, op):
        if isinstance(other, ScalarField):
            _same_chart(self, other)
            return ScalarField(self.chart, lambda p, r: op(self._fn(p, r), other._fn(p, r)))
        return ScalarField(self.chart, lambda p, r: op(self._fn(p, r), other))

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __mul__(self, other):
        if isinstance(other, (VectorField, Form)):
            return other.__rmul__(self)
        return self._binary(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.chart, lambda p, r: -self._fn(p, r))

    def differential(self) -> "OneForm":
        return OneForm(self.chart, lambda p, r: self._fn(p, r + 1).gradient())


class VectorField:
    """``X = X^j d/dy^j`` on a chart."""

    def __init__(self, chart: Chart, fn: Callable[[np.ndarray, int], Jet], exprs=None):
        self.chart = chart
        self._fn = fn
        self.exprs = exprs
        self._compiled = None

    @classmethod
    def from_exprs(cls, chart: Chart, components) -> "VectorField":
        if isinstance(components, Mapping):
            unknown = set(components) - set(chart.coords)
            if unknown:
                raise KeyError(f"unknown coordinate(s) {sorted(unknown)} for chart {chart.name!r}")
            components = [components.get(c, "0") for c in chart.coords]
        exprs = [parse(c) for c in components]
        if len(exprs) != chart.dim:
            raise ValueError(f"need {chart.dim} components, got {len(exprs)}")
        for e in exprs:
            check_bound(e, chart.coords)
        return cls(chart, lambda p, r: _expr_jets(chart, exprs, p, r), exprs=tuple(exprs))

    @classmethod
    def coordinate(cls, chart: Chart, name: str) -> "VectorField":
        """The coordinate field ``d/d name``."""
        comps = ["0"] * chart.dim
        comps[chart.index(name)] = "1"
        return cls.from_exprs(chart, comps)

    @classmethod
    def constant(cls, chart: Chart, vector) -> "VectorField":
        vector = np.asarray(vector, dtype=float)

        def fn(p, r):
            return Jet.constant(jet_space(chart.dim, r), np.broadcast_to(vector, (len(p), chart.dim)))

        return cls(chart, fn)

    def jet(self, points, order: int = 0) -> Jet:
        return self._fn(as_points(self.chart, points), order)

    def __call__(self, points) -> np.ndarray:
        p = as_points(self.chart, points)
        if self.exprs is not None:
            if self._compiled is None:
                self._compiled = [compile_expr(e, self.chart.coords) for e in self.exprs]
            cols = [p[:, i] for i in range(self.chart.dim)]
            return np.stack([np.broadcast_to(f(*cols), (len(p),)) for f in self._compiled], axis=1)
        return self.jet(p, 0).value

    def apply(self, f: ScalarField) -> ScalarField:
        """The derivative ``X(f)``."""
        _same_chart(self, f)
        return ScalarField(
            self.chart,
            lambda p, r: _jet.einsum("...i,...i->...", self._fn(p, r), f._fn(p, r + 1).gradient()),
        )

    def __add__(self, other):
        _same_chart(self, other)
        return VectorField(self.chart, lambda p, r: self._fn(p, r) + other._fn(p, r))

    def __sub__(self, other):
        _same_chart(self, other)
        return VectorField(self.chart, lambda p, r: self._fn(p, r) - other._fn(p, r))

    def __neg__(self):
        return VectorField(self.chart, lambda p, r: -self._fn(p, r))

    def __rmul__(self, other):
        if isinstance(other, ScalarField):
            _same_chart(self, other)
            return VectorField(self.chart, lambda p, r: self._fn(p, r) * other._fn(p, r)[..., None])
        return VectorField(self.chart, lambda p, r: self._fn(p, r) * float(other))

    __mul__ = __rmul__


class Form:
    """A differential ``degree``-form stored by its antisymmetric components."""

    def __init__(self, chart: Chart, degree: int, fn: Callable[[np.ndarray, int], Jet]):
        self.chart = chart
        self.degree = degree
        self._fn = fn

    def jet(self, points, order: int = 0) -> Jet:
        return self._fn(as_points(self.chart, points), order)

    def components(self, points) -> np.ndarray:
        return self.jet(points, 0).value

    def __add__(self, other):
        _same_chart(self, other)
        if other.degree != self.degree:
            raise ValueError("cannot add forms of different degree")
        return type(self)(self.chart, lambda p, r: self._fn(p, r) + other._fn(p, r))

    def __rmul__(self, other):
        if isinstance(other, ScalarField):
            _same_chart(self, other)
            k = self.degree

            def fn(p, r):
                f = other._fn(p, r)
                return self._fn(p, r) * f.reshape(len(p), *([1] * k))

            return type(self)(self.chart, fn)
        return type(self)(self.chart, lambda p, r: self._fn(p, r) * float(other))

    __mul__ = __rmul__


class OneForm(Form):
    def __init__(self, chart, fn):
        super().__init__(chart, 1, fn)

    @classmethod
    def from_exprs(cls, chart: Chart, components) -> "OneForm":
        if isinstance(components, Mapping):
            components = [components.get(c, "0") for c in chart.coords]
        exprs = [parse(c) for c in components]
        for e in exprs:
            check_bound(e, chart.coords)
        return cls(chart, lambda p, r: _expr_jets(chart, exprs, p, r))

    def __call__(self, X: VectorField) -> ScalarField:
        _same_chart(self, X)
        return ScalarField(self.chart, lambda p, r: _jet.einsum("...i,...i->...", self._fn(p, r), X._fn(p, r)))


class TwoForm(Form):
    def __init__(self, chart, fn):
        super().__init__(chart, 2, fn)

    @classmethod
    def from_exprs(cls, chart: Chart, entries) -> "TwoForm":
        """Build ``sum_{i<j} w_ij dy^i ^ dy^j`` from ``{(yi, yj): expr}``.

        Keys may name coordinates or indices; a key given in decreasing order
        contributes with the opposite sign.
        """
        m = chart.dim
        slots: dict = {}
        for (a, b), e in dict(entries).items():
            i = chart.index(a) if isinstance(a, str) else int(a)
            j = chart.index(b) if isinstance(b, str) else int(b)
            if i == j:
                raise ValueError("diagonal 2-form entries must vanish")
            e = parse(e)
            check_bound(e, chart.coords)
            key = (min(i, j), max(i, j))
            if key in slots:
                raise ValueError(f"2-form entry {key} given twice")
            slots[key] = (e, 1.0 if i < j else -1.0)
        keys = sorted(slots)
        exprs = [slots[k][0] for k in keys]
        signs = np.array([slots[k][1] for k in keys])

        def fn(p, r):
            space = jet_space(m, r)
            c = np.zeros((len(p), m, m, space.size))
            if keys:
                vals = _expr_jets(chart, exprs, p, r).c * signs[None, :, None]
                for n, (i, j) in enumerate(keys):
                    c[:, i, j] = vals[:, n]
                    c[:, j, i] = -vals[:, n]
            return Jet(space, c)

        return cls(chart, fn)

    @classmethod
    def constant(cls, chart: Chart, matrix) -> "TwoForm":
        matrix = np.asarray(matrix, dtype=float)
        if not np.allclose(matrix, -matrix.T, atol=0):
            raise ValueError("2-form matrix must be antisymmetric")

        def fn(p, r):
            return Jet.constant(jet_space(chart.dim, r), np.broadcast_to(matrix, (len(p),) + matrix.shape))

        return cls(chart, fn)

    def __call__(self, X: VectorField, Y: VectorField) -> ScalarField:
        _same_chart(self, X, Y)

        def fn(p, r):
            wy = _jet.einsum("...ij,...j->...i", self._fn(p, r), Y._fn(p, r))
            return _jet.einsum("...i,...i->...", X._fn(p, r), wy)

        return ScalarField(self.chart, fn)

    def matrix(self, points) -> np.ndarray:
        return self.components(points)


class CovariantTensor(Form):
    """A covariant tensor of arbitrary symmetry (components on ``degree`` axes)."""

    @classmethod
    def from_form(cls, form: Form) -> "CovariantTensor":
        return cls(form.chart, form.degree, form._fn)


def covariant_derivative_tensor(conn: "Connection", T: Form) -> CovariantTensor:
    """``(nabla T)_{i j1..jk} = d_i T_{j1..jk} - sum_s Gamma^l_{i j_s} T_{..l..}``.

    The derivative index comes first.
    """
    _same_chart(conn, T)
    k = T.degree

    def fn(p, r):
        t1 = T._fn(p, r + 1)
        out = t1.gradient().moveaxis(-1, 1)
        t = t1.truncate(r)
        g = conn._fn(p, r)
        for s in range(k):
            # contract slot s of T with the upper index of Gamma
            moved = t.moveaxis(1 + s, -1)  # (..., rest, l)
            term = _jet.einsum("...l,...lij->...ij", moved.reshape(len(p), -1, moved.shape[-1]), g[:, None])
            # term: (N, rest, i, j_s) -> (N, i, j1..jk)
            rest = moved.shape[1:-1]
            term = term.reshape(len(p), *rest, g.shape[-1], g.shape[-1])
            term = term.moveaxis(-2, 1).moveaxis(-1, 1 + 1 + s)
            out = out - term
        return out

    return CovariantTensor(conn.chart, k + 1, fn)


# differential operators ---------------------------------------------------------------


def bracket(X: VectorField, Y: VectorField) -> VectorField:
    """The Lie bracket ``[X, Y]`` as a field."""
    chart = _same_chart(X, Y)

    def fn(p, r):
        xj, yj = X._fn(p, r + 1), Y._fn(p, r + 1)
        dy = yj.gradient()  # [..., j, i] = d_i Y^j
        dx = xj.gradient()
        return (_jet.einsum("...i,...ji->...j", xj.truncate(r), dy)
                - _jet.einsum("...i,...ji->...j", yj.truncate(r), dx))

    return VectorField(chart, fn)


def lie_bracket(X: VectorField, Y: VectorField, p) -> np.ndarray:
    """Components of ``X^i d_i Y^j - Y^i d_i X^j`` at ``p``."""
    out = bracket(X, Y).jet(p, 0).value
    return out[0] if np.ndim(p) == 1 else out


def exterior_derivative(alpha):
    """``d`` of a scalar field, 1-form or 2-form."""
    if isinstance(alpha, ScalarField):
        return alpha.differential()
    k = alpha.degree
    chart = alpha.chart

    def fn(p, r):
        g = alpha._fn(p, r + 1).gradient()  # (N, m^k..., m) last axis = derivative
        g = g.moveaxis(-1, 1)  # (N, d, i1..ik)
        out = None
        for s in range(k + 1):
            term = g.moveaxis(1, 1 + s)
            out = term if out is None else (out - term if s % 2 else out + term)
        return out

    if k == 1:
        return TwoForm(chart, fn)
    return Form(chart, k + 1, fn)


class Connection:
    """A linear connection given by its Christoffel symbols."""

    def __init__(self, chart: Chart, fn: Callable[[np.ndarray, int], Jet], name: str = ""):
        self.chart = chart
        self._fn = fn
        self.name = name

    @classmethod
    def from_exprs(cls, chart: Chart, symbols: Mapping) -> "Connection":
        """``symbols[(k, i, j)]`` is the expression for ``Gamma^k_ij``."""
        m = chart.dim
        keys = []
        exprs = []
        for (k, i, j), e in symbols.items():
            idx = tuple(chart.index(v) if isinstance(v, str) else int(v) for v in (k, i, j))
            e = parse(e)
            check_bound(e, chart.coords)
            keys.append(idx)
            exprs.append(e)

        def fn(p, r):
            space = jet_space(m, r)
            c = np.zeros((len(p), m, m, m, space.size))
            if exprs:
                vals = _expr_jets(chart, exprs, p, r).c
                for n, idx in enumerate(keys):
                    c[(slice(None),) + idx] += vals[:, n]
            return Jet(space, c)

        return cls(chart, fn)

    @classmethod
    def flat(cls, chart: Chart) -> "Connection":
        m = chart.dim
        return cls(chart, lambda p, r: Jet(jet_space(m, r), np.zeros((len(p), m, m, m, jet_space(m, r).size))))

    def christoffel(self, points, order: int = 0) -> Jet:
        return self._fn(as_points(self.chart, points), order)

    def perturbed(self, k: int, i: int, j: int, eps: float) -> "Connection":
        def fn(p, r):
            g = self._fn(p, r)
            c = g.c.copy()
            c[:, k, i, j, 0] += eps
            return Jet(g.space, c)

        return Connection(self.chart, fn, name=f"{self.name}+{eps:g}[{k},{i},{j}]")

    def covariant(self, X: VectorField, Y: VectorField) -> VectorField:
        """``nabla_X Y = X^i d_i Y^k + Gamma^k_ij X^i Y^j``."""
        _same_chart(self, X, Y)

        def fn(p, r):
            xj = X._fn(p, r)
            yj = Y._fn(p, r + 1)
            g = self._fn(p, r)
            out = _jet.einsum("...i,...ki->...k", xj, yj.gradient())
            gy = _jet.einsum("...kij,...j->...ki", g, yj.truncate(r))
            return out + _jet.einsum("...ki,...i->...k", gy, xj)

        return VectorField(self.chart, fn)


def torsion(conn: Connection, X: VectorField, Y: VectorField, p) -> np.ndarray:
    """``nabla_X Y - nabla_Y X - [X, Y]`` at ``p``."""
    _same_chart(conn, X, Y)
    t = conn.covariant(X, Y) - conn.covariant(Y, X) - bracket(X, Y)
    out = t.jet(p, 0).value
    return out[0] if np.ndim(p) == 1 else out


def curvature(conn: Connection, X: VectorField, Y: VectorField, Z: VectorField, p) -> np.ndarray:
    """``R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z`` at ``p``."""
    _same_chart(conn, X, Y, Z)
    r = (conn.covariant(X, conn.covariant(Y, Z))
         - conn.covariant(Y, conn.covariant(X, Z))
         - conn.covariant(bracket(X, Y), Z))
    out = r.jet(p, 0).value
    return out[0] if np.ndim(p) == 1 else out


def torsion_tensor(conn: Connection, points) -> np.ndarray:
    """``T^k_ij = Gamma^k_ij - Gamma^k_ji`` at each point."""
    g = conn.christoffel(points, 0).value
    return g - np.swapaxes(g, -1, -2)


def curvature_tensor(conn: Connection, points) -> np.ndarray:
    """``R[..., l, k, i, j]``: component ``l`` of ``R(d_i, d_j) d_k``."""
    g = conn.christoffel(points, 1)
    dg = g.gradient().value  # [..., l, j, k, i] = d_i Gamma^l_jk
    g0 = g.value
    d_i = np.einsum("...ljki->...lkij", dg)
    gg = np.einsum("...lis,...sjk->...lkij", g0, g0)
    return d_i - np.swapaxes(d_i, -1, -2) + gg - np.swapaxes(gg, -1, -2)


# maps ----------------------------------------------------------------------------------


class Map:
    """A smooth map between charts given by component expressions (or a closure)."""

    def __init__(self, source: Chart, target: Chart, fn: Callable[[np.ndarray, int], Jet], exprs=None,
                 name: str = ""):
        self.source = source
        self.target = target
        self._fn = fn
        self.exprs = exprs
        self.name = name
        self._compiled = None

    @classmethod
    def from_exprs(cls, source: Chart, target: Chart, components, name: str = "") -> "Map":
        if isinstance(components, Mapping):
            missing = set(target.coords) - set(components)
            if missing:
                raise KeyError(f"map {name!r} lacks component(s) {sorted(missing)}")
            components = [components[c] for c in target.coords]
        exprs = [parse(c) for c in components]
        if len(exprs) != target.dim:
            raise ValueError(f"map needs {target.dim} components")
        for e in exprs:
            check_bound(e, source.coords)
        return cls(source, target, lambda p, r: _expr_jets(source, exprs, p, r), exprs=tuple(exprs), name=name)

    @classmethod
    def identity(cls, chart: Chart) -> "Map":
        return cls.from_exprs(chart, chart, list(chart.coords), name="id")

    def jets(self, points, order: int = 0) -> Jet:
        return self._fn(as_points(self.source, points), order)

    def __call__(self, points) -> np.ndarray:
        p = as_points(self.source, points)
        if self.exprs is not None:
            if self._compiled is None:
                self._compiled = [compile_expr(e, self.source.coords) for e in self.exprs]
            cols = [p[:, i] for i in range(self.source.dim)]
            return np.stack([np.broadcast_to(f(*cols), (len(p),)) for f in self._compiled], axis=1)
        return self.jets(p, 0).value

    def jacobian(self, points) -> np.ndarray:
        """``D phi`` with shape ``(N, m_target, m_source)``."""
        return self.jets(points, 1).gradient().value


def check_inverse(phi: Map, phi_inv: Map, points, tol: float = 1e-8, *, modulus=None) -> float:
    """Max ``|phi(phi_inv(p)) - p|`` over ``points`` of the target chart.

    With ``modulus`` set, differences are reduced to the nearest period.
    Raises :class:`InverseMismatchError` above ``tol``.
    """
    if phi_inv.source != phi.target or phi_inv.target != phi.source:
        raise ChartMismatchError("inverse map charts do not match")
    p = as_points(phi.target, points)
    diff = phi(phi_inv(p)) - p
    if modulus is not None:
        diff = diff - modulus * np.round(diff / modulus)
    err = float(np.max(np.abs(diff))) if diff.size else 0.0
    if not err <= tol:
        k = int(np.argmax(np.max(np.abs(diff), axis=1)))
        raise InverseMismatchError(
            f"phi(phi_inv(p)) differs from p by {err:.3e} > {tol:g} at p={p[k].tolist()}"
        )
    return err


def pushforward(phi: Map, phi_inv: Map, X: VectorField) -> VectorField:
    """``(phi_* X)_p = D phi(phi_inv(p)) . X(phi_inv(p))`` as a field on the target."""
    if X.chart != phi.source:
        raise ChartMismatchError("field is not on the source chart of the map")

    def fn(p, r):
        q = phi_inv._fn(p, r)  # jets in target variables
        q0 = q.value
        xq = _jet.compose(X._fn(q0, r), q)
        dphi = _jet.compose(phi._fn(q0, r + 1).gradient(), q)
        return _jet.einsum("...ai,...i->...a", dphi, xq)

    return VectorField(phi.target, fn)


def pushforward_vf(phi: Map, phi_inv: Map, X: VectorField, p, *, tol: float = 1e-8) -> np.ndarray:
    pts = as_points(phi.target, p)
    check_inverse(phi, phi_inv, pts, tol)
    out = pushforward(phi, phi_inv, X).jet(pts, 0).value
    return out[0] if np.ndim(p) == 1 else out


def pullback(psi: Map, form: Form) -> Form:
    """``psi^* form`` for a 1- or 2-form on ``psi.target``."""
    if form.chart != psi.target:
        raise ChartMismatchError("form is not on the target chart of the map")

    def fn(p, r):
        q = psi._fn(p, r + 1)
        dpsi = q.gradient()  # (N, a, i)
        qr = q.truncate(r)
        w = _jet.compose(form._fn(q.value, r), qr)
        if form.degree == 1:
            return _jet.einsum("...a,...ai->...i", w, dpsi)
        wd = _jet.einsum("...ab,...bj->...aj", w, dpsi)
        return _jet.einsum("...ai,...aj->...ij", dpsi, wd)

    if form.degree == 1:
        return OneForm(psi.source, fn)
    if form.degree == 2:
        return TwoForm(psi.source, fn)
    raise NotImplementedError("pullback is implemented for 1- and 2-forms")


def frame_matrix(fields: Sequence[VectorField], points, order: int = 0) -> Jet:
    """Stack fields into a jet of shape ``(N, k, m)`` (row ``a`` = field ``a``)."""
    return Jet.stack([f._fn(as_points(fields[0].chart, points), order) for f in fields], axis=1)


def smallest_singular_value(mat: np.ndarray) -> np.ndarray:
    return np.linalg.svd(mat, compute_uv=False)[..., -1]


def finite_max(a) -> float:
    a = np.asarray(a, dtype=float)
    return float(np.max(np.abs(a))) if a.size else 0.0


__all__ = [
    "Chart", "ScalarField", "VectorField", "Form", "OneForm", "TwoForm", "Connection", "Map",
    "bracket", "lie_bracket", "exterior_derivative", "torsion", "curvature", "torsion_tensor",
    "curvature_tensor", "pushforward", "pushforward_vf", "pullback", "check_inverse",
    "ChartMismatchError", "InverseMismatchError", "sample_box", "coordinate_jets", "frame_matrix",
    "CovariantTensor", "covariant_derivative_tensor",
]
