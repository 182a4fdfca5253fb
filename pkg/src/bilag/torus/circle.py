"""Degree-one circle maps with a flat piece, rotation numbers and exponents.

A map is stored through a lift ``F`` on the closed interval ``[b, a + 1]``
(the complement of the flat piece ``(a, b)`` unrolled from ``b``), with
``F(b) = v`` and ``F(a + 1) = v + 1`` for a lifted flat value ``v``.  On the
flat piece ``F`` is constant, and ``F(x + 1) = F(x) + 1`` extends it to the
line.  Sampled maps interpolate linearly between samples; maps with a known
formula also carry it as ``exact``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..expr import compile_expr, parse, to_source
from ..geom import Chart, Map, check_inverse
from ..report import VerificationReport

CIRCLE = Chart("S1", ("x",), ((0.0, 1.0),))

LIMIT_TOL = 1e-6
FIT_WINDOW = (1e-5, 1e-2)


class CircleMapError(ValueError):
    pass


@dataclass
class CircleMapWithFlat:
    a: float
    b: float
    v: float
    xs: np.ndarray
    fs: np.ndarray
    ts: np.ndarray | None = None
    exact: Callable | None = None
    name: str = "f"
    grid: dict | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float)
        self.fs = np.asarray(self.fs, dtype=float)
        if self.ts is not None:
            self.ts = np.asarray(self.ts, dtype=float)
        if self.xs.ndim != 1 or self.xs.shape != self.fs.shape or len(self.xs) < 2:
            raise CircleMapError("samples must be matching 1-d arrays with at least two points")
        if not self.b <= self.a + 1:
            raise CircleMapError("need b <= a + 1")
        if np.any(np.diff(self.xs) <= 0):
            raise CircleMapError("sample abscissae must be strictly increasing")

    # basic evaluation -------------------------------------------------------------------

    @property
    def width(self) -> float:
        return float(self.b - self.a)

    @property
    def has_flat(self) -> bool:
        return self.width > 0

    def lift(self, x) -> np.ndarray:
        """The lift ``F`` at arbitrary real ``x``."""
        x = np.asarray(x, dtype=float)
        k = np.floor(x - self.b)
        u = x - k
        inside = u <= self.a + 1
        if self.exact is not None:
            val = np.where(inside, self.exact(np.where(inside, u, self.b)), self.v + 1)
        else:
            val = np.where(inside, np.interp(u, self.xs, self.fs), self.v + 1)
        return val + k

    def __call__(self, x) -> np.ndarray:
        return np.mod(self.lift(x), 1.0)

    def in_delta(self, x) -> np.ndarray:
        u = np.mod(np.asarray(x, dtype=float) - self.b, 1.0) + self.b
        return ~((u > self.a + 1) & (u < self.b + 1)) if self.has_flat else np.ones(np.shape(x), dtype=bool)

    # invariants -------------------------------------------------------------------------

    def inversions(self) -> int:
        return int(np.count_nonzero(np.diff(self.fs) < 0))

    def limit_gaps(self) -> tuple:
        """``(|F(b+) - v|, |F(a+1-) - v - 1|)`` from the outermost samples."""
        return abs(self.fs[0] - self.v), abs(self.fs[-1] - self.v - 1)

    def check(self, tol: float = LIMIT_TOL) -> VerificationReport:
        rep = VerificationReport(f"circle map {self.name}")
        rep.add("monotonicity inversions", self.inversions(), 0, samples=len(self.xs), operation="CircleMapWithFlat")
        if self.has_flat:
            gb, ga = self.limit_gaps()
            rep.add("one-sided limit at a", ga, tol, operation="CircleMapWithFlat", worst_point=[self.a])
            rep.add("one-sided limit at b", gb, tol, operation="CircleMapWithFlat", worst_point=[self.b])
        else:
            rep.add("degree one", abs(self.fs[-1] - self.fs[0] - 1), tol, operation="CircleMapWithFlat")
        return rep

    def to_csv(self, n: int = 512) -> str:
        """Rows ``x, f_x, t_x, in_delta``; uses the generating grid when present."""
        if self.grid is not None:
            xs, fx, tx, ind = (self.grid[k] for k in ("x", "f_x", "t_x", "in_delta"))
        else:
            xs = np.arange(n) / n
            fx = self(xs)
            tx = np.full(n, np.nan)
            ind = self.in_delta(xs)
        lines = ["x,f_x,t_x,in_delta"]
        for x, f, t, d in zip(xs, fx, tx, ind):
            ts = "" if not np.isfinite(t) else f"{t:.12g}"
            lines.append(f"{x:.12g},{f:.12g},{ts},{int(bool(d))}")
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {
            "name": self.name,
            "a": self.a % 1.0,
            "b": self.b % 1.0,
            "flat_width": self.width,
            "flat_value": self.v % 1.0,
            "samples": int(len(self.xs)),
            "inversions": self.inversions(),
            **{k: v for k, v in self.meta.items() if isinstance(v, (int, float, str))},
        }


def rotation_map(alpha: float, n: int = 512, name: str = "rotation") -> CircleMapWithFlat:
    xs = np.linspace(0.0, 1.0, n + 1)
    return CircleMapWithFlat(0.0, 0.0, alpha, xs, xs + alpha, exact=lambda u: u + alpha, name=name)


def diffeo_map(F: Callable, n: int = 512, name: str = "f") -> CircleMapWithFlat:
    """A circle map without flat piece from an increasing lift ``F``."""
    xs = np.linspace(0.0, 1.0, n + 1)
    fs = F(xs)
    return CircleMapWithFlat(0.0, 0.0, float(fs[0]), xs, fs, exact=F, name=name)


def flat_profile(u, l1: float, l2: float):
    """``u^l2 / (u^l2 + (1-u)^l1)``: increasing on [0, 1], order ``l2`` at 0 and ``l1`` at 1."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    p = u ** l2
    q = (1.0 - u) ** l1
    return p / (p + q)


def synthetic_map(a: float, b: float, v: float, l1: float, l2: float, n: int = 512,
                  name: str = "synthetic") -> CircleMapWithFlat:
    """A map in the class with flat piece ``(a, b)``, value ``v`` and exponents ``(l1, l2)``.

    ``l1`` governs the left end ``a`` and ``l2`` the right end ``b``.
    """
    if not 0 <= a < b < a + 1:
        raise CircleMapError("need 0 <= a < b < a + 1")
    L = a + 1 - b

    def exact(u):
        return v + flat_profile((np.asarray(u) - b) / L, l1, l2)

    d = np.geomspace(FIT_WINDOW[0] * 0.5, FIT_WINDOW[1] * 2, 48)
    xs = np.unique(np.concatenate([np.linspace(b, a + 1, n), b + d, a + 1 - d]))
    return CircleMapWithFlat(a, b, v, xs, exact(xs), exact=exact, name=name,
                             meta={"l1_true": l1, "l2_true": l2})


# rotation number --------------------------------------------------------------------------


@dataclass
class RotationNumberEstimate:
    value: float  # in [0, 1)
    raw: float  # F^N(0) / N
    iterations: int
    width: float
    second_seed: float
    second_value: float

    def contains(self, rho: float, slack: float = 0.0) -> bool:
        d = (rho - self.raw + 0.5) % 1.0 - 0.5
        return abs(d) <= self.width / 2 + slack

    def to_dict(self) -> dict:
        return {"rho": self.value, "raw": self.raw, "iterations": self.iterations, "enclosure_width": self.width,
                "second_seed": self.second_seed, "second_seed_estimate": self.second_value}


def rotation_number(f: CircleMapWithFlat, N: int = 10_000, x0: float = 0.5) -> RotationNumberEstimate:
    """``F^N(0)/N``; for a monotone degree-one lift ``|F^N(x)/N - rho| < 1/N`` for every ``x``."""
    if f.inversions():
        raise CircleMapError(f"{f.name}: lift samples are not monotone")
    x = np.array([0.0, x0])
    for _ in range(N):
        x = f.lift(x)
    est = x / N
    if abs(est[0] - est[1]) > 2.0 / N:
        raise CircleMapError(f"{f.name}: seeds disagree beyond 2/N, lift is not monotone degree-one")
    return RotationNumberEstimate(float(est[0] % 1.0), float(est[0]), N, 2.0 / N, x0, float(est[1]))


# critical exponents -------------------------------------------------------------------------


@dataclass
class ExponentFit:
    l1: float
    l2: float
    r2_left: float
    r2_right: float
    n_left: int
    n_right: int
    window: tuple = FIT_WINDOW

    def to_dict(self) -> dict:
        return {"l1": self.l1, "l2": self.l2, "r2_left": self.r2_left, "r2_right": self.r2_right,
                "n_left": self.n_left, "n_right": self.n_right, "window": list(self.window)}


def _loglog(delta, values):
    X = np.log(delta)
    Y = np.log(values)
    A = np.stack([X, np.ones_like(X)], axis=1)
    coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
    pred = A @ coef
    ss = np.sum((Y - Y.mean()) ** 2)
    r2 = 1.0 - np.sum((Y - pred) ** 2) / ss if ss > 0 else 1.0
    return float(coef[0]), float(r2)


def critical_exponents(f: CircleMapWithFlat, window=FIT_WINDOW, min_points: int = 8, n: int = 40) -> ExponentFit:
    """Log-log slopes of ``|F - v|`` against the distance to ``a`` (left) and ``b`` (right)."""
    if not f.has_flat:
        raise CircleMapError(f"{f.name} has no flat piece")
    lo, hi = window
    if f.exact is not None:
        d = np.geomspace(lo, hi, n)
        dl = dr = d
        vl = np.abs(f.v + 1 - f.exact(f.a + 1 - d))
        vr = np.abs(f.exact(f.b + d) - f.v)
    else:
        dist_l = f.a + 1 - f.xs
        dist_r = f.xs - f.b
        ml = (dist_l >= lo) & (dist_l <= hi)
        mr = (dist_r >= lo) & (dist_r <= hi)
        dl, vl = dist_l[ml], np.abs(f.v + 1 - f.fs[ml])
        dr, vr = dist_r[mr], np.abs(f.fs[mr] - f.v)
    if len(dl) < min_points or len(dr) < min_points:
        raise CircleMapError(f"{f.name}: insufficient resolution near the flat piece "
                             f"({len(dl)} left, {len(dr)} right samples in [{lo:g}, {hi:g}])")
    if np.any(vl <= 0) or np.any(vr <= 0):
        raise CircleMapError(f"{f.name}: map is constant next to the flat piece")
    l1, r1 = _loglog(dl, vl)
    l2, r2 = _loglog(dr, vr)
    return ExponentFit(l1, l2, r1, r2, len(dl), len(dr), (lo, hi))


# gluing --------------------------------------------------------------------------------------


def glue(f1: CircleMapWithFlat, f2: CircleMapWithFlat, tol: float = LIMIT_TOL, name: str | None = None) -> CircleMapWithFlat:
    """``f1`` on ``[0, a1]``, constant on ``(a1, b2)``, ``f2`` on ``[b2, 1]``.

    Requires ``a1 < a2 <= b1 < b2`` inside ``[0, 1]`` and equal flat values.
    The mismatch of the two pieces at ``0 = 1`` is reported in ``meta`` as
    ``wrap_gap``.
    """
    a1, b1, a2, b2 = f1.a, f1.b, f2.a, f2.b
    if not (0 <= a1 < a2 <= b1 < b2 <= 1):
        raise CircleMapError(f"glue needs 0 <= a1 < a2 <= b1 < b2 <= 1, got a1={a1}, b1={b1}, a2={a2}, b2={b2}")
    dv = (f2.v - f1.v + 0.5) % 1.0 - 0.5
    if abs(dv) > tol:
        raise CircleMapError(f"flat values differ by {abs(dv):.3e} > {tol:g}")
    V = f1.v
    shift = (f1.v + dv) - f2.v  # integer-corrected offset aligning f2's lift
    # f2 on [b2, 1) and f1 on [1, a1 + 1]
    m2 = f2.xs < 1.0
    m1 = f1.xs >= 1.0
    xs = np.concatenate([f2.xs[m2], f1.xs[m1]])
    fs = np.concatenate([f2.fs[m2] + shift, f1.fs[m1]])
    ts = None
    if f1.ts is not None and f2.ts is not None:
        ts = np.concatenate([f2.ts[m2], f1.ts[m1]])
    if xs[0] > b2 or xs[-1] < a1 + 1:
        raise CircleMapError("input samples do not reach the glued endpoints")
    exact = None
    if f1.exact is not None and f2.exact is not None:
        e1, e2 = f1.exact, f2.exact

        def exact(u):
            u = np.asarray(u, dtype=float)
            return np.where(u < 1.0, e2(np.minimum(u, f2.a + 1)) + shift, e1(np.maximum(u, f1.b)))

    wrap = abs(float(f2.lift(1.0) + shift - f1.lift(1.0)))
    g = CircleMapWithFlat(a1, b2, V, xs, fs, ts, exact, name or f"glue({f1.name},{f2.name})",
                          meta={"wrap_gap": wrap})
    return g


# circle diffeomorphisms and conjugation ---------------------------------------------------------


class CircleDiffeo:
    """An orientation preserving circle diffeomorphism given by a lift and its inverse (in ``x``)."""

    def __init__(self, lift, inverse, name: str = "phi", tol: float = 1e-8):
        self.lift_expr = parse(lift)
        self.inverse_expr = parse(inverse)
        self.name = name
        self.map = Map.from_exprs(CIRCLE, CIRCLE, [self.lift_expr], name)
        self.inv_map = Map.from_exprs(CIRCLE, CIRCLE, [self.inverse_expr], name + "^-1")
        self._f = compile_expr(self.lift_expr, ("x",))
        self._g = compile_expr(self.inverse_expr, ("x",))
        self.check(tol)

    @property
    def lift_src(self) -> str:
        return to_source(self.lift_expr)

    @property
    def inverse_src(self) -> str:
        return to_source(self.inverse_expr)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self._f(x), x.shape) * 1.0

    def inverse(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self._g(x), x.shape) * 1.0

    def check(self, tol: float = 1e-8) -> None:
        g = np.linspace(0.0, 1.0, 257)
        for fn, label in ((self, self.name), (self.inverse, self.name + "^-1")):
            if np.max(np.abs(fn(g + 1) - fn(g) - 1)) > tol:
                raise CircleMapError(f"{label} is not a degree-one lift")
        check_inverse(self.map, self.inv_map, g[:, None], tol)
        check_inverse(self.inv_map, self.map, g[:, None], tol)
        d = self.map.jacobian(g[:, None])[:, 0, 0]
        if np.any(d <= 0):
            raise CircleMapError(f"{self.name} is not orientation preserving")

    def torus_product(self):
        """``(x, y) -> (phi(x), y)`` as a torus diffeomorphism."""
        from .field import TorusDiffeo

        return TorusDiffeo.from_exprs([self.lift_src, "y"], [self.inverse_src, "y"], self.name)


def rotation_diffeo(c: float, name: str = "rot") -> CircleDiffeo:
    return CircleDiffeo(f"x + {c!r}", f"x - {c!r}", name)


def stretch_diffeo(k: float, shift: float = 0.0, name: str = "stretch") -> CircleDiffeo:
    """``tan(pi phi(x)) = k tan(pi x)`` followed by a rotation by ``shift``."""
    def lift(kk, s, var):
        return (f"{var} + atan(({kk!r} - 1)*sin(pi*{var})*cos(pi*{var})"
                f"/(cos(pi*{var})^2 + {kk!r}*sin(pi*{var})^2))/pi{s}")

    fwd = lift(float(k), f" + {shift!r}" if shift else "", "x")
    inner = f"(x - {shift!r})" if shift else "x"
    inv = lift(1.0 / float(k), "", inner)
    return CircleDiffeo(fwd, inv, name)


def conjugate_map(phi: CircleDiffeo, f: CircleMapWithFlat, name: str | None = None) -> CircleMapWithFlat:
    """``phi o f o phi^-1``, resampled exactly at ``phi(xs)``."""
    a, b = float(phi(f.a)), float(phi(f.b))
    k = math.floor(a)
    xs = phi(f.xs) - k
    fs = phi(f.fs) - k
    v = float(phi(f.v)) - k
    exact = None
    if f.exact is not None:
        e = f.exact

        def exact(u):
            return phi(e(phi.inverse(np.asarray(u, dtype=float) + k))) - k

    ts = f.ts
    g = CircleMapWithFlat(a - k, b - k, v, xs, fs, ts, exact, name or f"{phi.name}.{f.name}.{phi.name}^-1")
    return g
