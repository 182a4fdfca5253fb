"""First-return maps of torus flows from the circle ``y = 0`` to ``y = 1``.

Points of the circle whose trajectory is captured by the sink form the flat
piece.  Trajectories are integrated in the cover, so the end abscissae form a
lift of the map directly.
"""

from __future__ import annotations

import warnings

import numpy as np

from ..report import VerificationReport
from . import integrate as _int
from .circle import FIT_WINDOW, CircleDiffeo, CircleMapError, CircleMapWithFlat, conjugate_map
from .field import TorusDiffeo, TorusVectorField, find_singularities, flow_batch, pushforward_torus_field

ENDPOINT_TOL = 1e-8
GAP_ERROR = 1e-4
SEPARATRIX_OFFSET = 1e-7


class ReturnMapError(RuntimeError):
    pass


def _transit(X, xs, sinks, tmax):
    P = np.stack([np.asarray(xs, dtype=float), np.zeros(len(xs))], axis=1)
    res = _int.integrate(X, P, section=1.0, t_max=tmax, sinks=sinks)
    if np.any(res.status == _int.UNDERFLOW):
        i = int(np.argmax(res.status == _int.UNDERFLOW))
        raise ReturnMapError(f"step-size underflow from x={xs[i]!r}")
    return res


def _cyclic_run(captured: np.ndarray):
    """Start and end index of the single cyclic run of ``True``; raises if there are several."""
    n = len(captured)
    starts = [i for i in range(n) if captured[i] and not captured[i - 1]]
    if len(starts) != 1:
        raise ReturnMapError(f"expected one capture interval on the section, found {len(starts)}")
    s = starts[0]
    e = s
    while captured[(e + 1) % n]:
        e += 1
    return s, e  # indices into the cyclic grid, e may exceed n - 1


def _bisect_edges(X, lo, hi, sinks, tmax, tol):
    """Shrink brackets ``(reach, capture)`` to width ``tol``; returns final reach points and results."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    while np.max(np.abs(hi - lo)) > tol:
        mid = 0.5 * (lo + hi)
        r = _transit(X, mid, sinks, tmax)
        reach = r.status == _int.REACHED
        lo = np.where(reach, mid, lo)
        hi = np.where(reach, hi, mid)
    return lo, hi


def separatrix_value(X: TorusVectorField, saddle, sinks, tmax=_int.T_MAX, offset=SEPARATRIX_OFFSET):
    """Where the unstable branch of the saddle that escapes the sink first meets ``y = 1`` (mod 1)."""
    J = X.jacobian(saddle.location)[0]
    w, V = np.linalg.eig(J)
    u = np.real(V[:, int(np.argmax(np.real(w)))])
    starts = np.array([saddle.location + offset * u, saddle.location - offset * u])
    r = _int.integrate(X, starts, section=1.0, t_max=tmax, sinks=sinks)
    ok = np.flatnonzero(r.status == _int.REACHED)
    if len(ok) != 1:
        return None
    return float(r.points[ok[0], 0])


def return_map(X: TorusVectorField, grid: int = 512, tmax: float = _int.T_MAX, *, endpoint_tol: float = ENDPOINT_TOL,
               exponent_samples: int = 24, name: str | None = None) -> CircleMapWithFlat:
    """The first-return map ``y = 0 -> y = 1`` on a ``grid``-point lattice with refined flat piece."""
    name = name or f"return({X.name})"
    sings, _ = find_singularities(X)
    sinks = [s.location for s in sings if s.kind == "hyperbolic-sink"]
    saddles = [s for s in sings if s.kind == "hyperbolic-saddle"]
    xs = np.arange(grid) / grid
    res = _transit(X, xs, sinks, tmax)
    captured = res.status != _int.REACHED
    F = res.points[:, 0]
    T = res.times
    if not captured.any():
        warnings.warn(f"{name}: no capture region, the return map is a circle diffeomorphism", stacklevel=2)
        xl = np.append(xs, 1.0)
        fl = np.append(F, F[0] + 1.0)
        tl = np.append(T, T[0])
        inv = int(np.count_nonzero(np.diff(fl) < 0))
        m = CircleMapWithFlat(0.0, 0.0, float(F[0]), xl, fl, tl, name=name,
                              grid={"x": xs, "f_x": np.mod(F, 1.0), "t_x": T, "in_delta": np.ones(grid, bool)},
                              meta={"warning": "no capture region", "grid_inversions": inv})
        return m
    if captured.all():
        raise ReturnMapError(f"{name}: every grid point is captured")
    s, e = _cyclic_run(captured)
    # brackets in lifted coordinates: a in (x[s-1], x[s]), b in (x[e], x[e+1])
    lo = [(s - 1) / grid, (e + 1) / grid]
    hi = [s / grid, e / grid]
    reach, _ = _bisect_edges(X, lo, hi, sinks, tmax, endpoint_tol)
    a_lift, b_lift = float(reach[0]), float(reach[1])
    # normalise so that a lies in [0, 1) and b in (a, a + 1)
    k = np.floor(a_lift)
    a, b = a_lift - k, b_lift - k
    # extra samples close to both ends, for exponent fits
    d = np.geomspace(FIT_WINDOW[0] * 0.9, FIT_WINDOW[1] * 1.1, exponent_samples)
    extra_x = np.concatenate([[a, b], a - d, b + d])
    er = _transit(X, np.mod(extra_x, 1.0), sinks, tmax)
    if np.any(er.status != _int.REACHED):
        raise ReturnMapError(f"{name}: samples next to the flat piece were captured; refine the grid")
    # lifted samples on [b, a + 1]: torus abscissa x sits at u = b + ((x - b) mod 1)
    tx_all = np.concatenate([xs[~captured], np.mod(extra_x, 1.0)])
    all_f = np.concatenate([F[~captured], er.points[:, 0]])
    all_t = np.concatenate([T[~captured], er.times])
    lx = b + np.mod(tx_all - b, 1.0)
    n0 = int(np.count_nonzero(~captured))
    lx[n0], lx[n0 + 1] = a + 1, b  # the refined endpoints themselves
    lf = all_f + np.round(lx - tx_all)
    order = np.argsort(lx, kind="stable")
    lx, lf, lt = lx[order], lf[order], all_t[order]
    keep = np.concatenate([[True], np.diff(lx) > 0])
    lx, lf, lt = lx[keep], lf[keep], lt[keep]
    # lift of the flat value: F(b+) and F(a+1-) - 1 must agree
    f_right = lf[0]
    f_left = lf[-1] - 1.0
    gap = abs(f_left - f_right)
    if gap > GAP_ERROR:
        raise ReturnMapError(f"{name}: one-sided limits differ by {gap:.3e}")
    v = 0.5 * (f_left + f_right)
    meta = {"one_sided_gap": gap, "endpoint_tol": endpoint_tol, "captured_grid_points": int(captured.sum())}
    if saddles:
        sv = separatrix_value(X, saddles[0], sinks, tmax)
        if sv is not None:
            meta["separatrix_value"] = sv % 1.0
            meta["separatrix_gap"] = abs((sv - v + 0.5) % 1.0 - 0.5)
    ind = ~captured
    fx = np.where(ind, np.mod(F, 1.0), v % 1.0)
    tx = np.where(ind, T, np.nan)
    return CircleMapWithFlat(float(a), float(b), float(v), lx, lf, lt, name=name,
                             grid={"x": xs, "f_x": fx, "t_x": tx, "in_delta": ind}, meta=meta)


def grid_inversions(f: CircleMapWithFlat) -> int:
    """Inversions of the lifted map restricted to the generating grid points in ``Delta``."""
    if f.grid is None:
        return f.inversions()
    xs = f.grid["x"][f.grid["in_delta"]]
    u = np.mod(xs - f.b, 1.0) + f.b
    vals = f.lift(u)
    return int(np.count_nonzero(np.diff(vals[np.argsort(u)]) < 0))


def return_map_report(X: TorusVectorField, f: CircleMapWithFlat, tol: float = 1e-6) -> VerificationReport:
    rep = VerificationReport(f"return map of {X.name}")
    rep.add("monotonicity inversions on grid", grid_inversions(f), 0, samples=len(f.grid["x"]) if f.grid else 0,
            operation="return_map")
    if f.has_flat:
        rep.add("one-sided limit gap |f(a-) - f(b+)|", f.meta["one_sided_gap"], tol, operation="return_map",
                worst_point=[f.a, f.b])
        rep.add("flat piece width", f.width, 0.0, comparator=">=", operation="return_map")
        if "separatrix_gap" in f.meta:
            rep.add("flat value vs unstable separatrix", f.meta["separatrix_gap"], tol, operation="return_map")
    else:
        rep.note("no capture region: circle diffeomorphism")
    rep.data.update(f.summary())
    return rep


# equivariance ------------------------------------------------------------------------------------------


def _circle_dist(u, v):
    return np.abs((np.asarray(u) - np.asarray(v) + 0.5) % 1.0 - 0.5)


def direct_values(X: TorusVectorField, f: CircleMapWithFlat, xs, tmax=_int.T_MAX) -> np.ndarray:
    """The return map of ``X`` at ``xs`` by fresh integration (captured points take the flat value)."""
    sinks = [s.location for s in find_singularities(X)[0] if s.kind == "hyperbolic-sink"]
    r = _transit(X, xs, sinks, tmax)
    return np.where(r.status == _int.REACHED, np.mod(r.points[:, 0], 1.0), f.v % 1.0)


def verify_equivariance(phi: CircleDiffeo, X: TorusVectorField, *, grid: int = 256, map_grid: int = 512,
                        tol: float = 1e-4, f: CircleMapWithFlat | None = None, tmax=_int.T_MAX) -> VerificationReport:
    """Compare the map generated by ``phi_* X`` with ``phi o f o phi^-1`` on a grid.

    ``phi`` acts as ``(x, y) -> (phi(x), y)`` on the torus, which preserves the section circles.
    """
    D = phi.torus_product()
    if not D.preserves_sections():
        raise ReturnMapError(f"{phi.name} does not preserve the section circles")
    Y = pushforward_torus_field(D, X)
    f = f or return_map(X, map_grid, tmax)
    g = return_map(Y, map_grid, tmax)
    xs = np.arange(grid) / grid
    lhs = direct_values(Y, g, xs, tmax)
    pre = np.mod(phi.inverse(xs), 1.0)
    rhs = np.mod(phi(direct_values(X, f, pre, tmax)), 1.0)
    err = _circle_dist(lhs, rhs)
    rep = VerificationReport(f"equivariance under {phi.name}")
    k = int(np.argmax(err))
    rep.add("sup |g - phi o f o phi^-1| on grid", float(err[k]), tol, samples=grid, operation="verify_equivariance",
            worst_point=[xs[k]])
    conj = conjugate_map(phi, f)
    if f.has_flat or g.has_flat:
        haus = max(_circle_dist(g.a, conj.a), _circle_dist(g.b, conj.b))
        rep.add("Hausdorff distance of flat pieces", float(haus), tol, operation="verify_equivariance")
        rep.add("flat value phi(v) vs generated", float(_circle_dist(g.v, conj.v)), tol,
                operation="verify_equivariance")
    rep.data["phi"] = phi.lift_src
    rep.data["f"] = f.summary()
    rep.data["g"] = g.summary()
    return rep
