"""Vectorized Dormand-Prince 5(4) integration of planar fields in the universal cover.

All trajectories in a batch advance together with their own step sizes.  Two
modes are supported: fixed elapsed time (either sign) and "until the height
``y`` first reaches ``c``".  Section crossings are localized by bisection on
the length of the last step until ``|y - c| <= section_tol``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

REACHED = 0
CAPTURED = 1
TMAX = 2
UNDERFLOW = 3
STATUS_NAMES = {REACHED: "reached", CAPTURED: "captured", TMAX: "tmax", UNDERFLOW: "underflow"}

ATOL = 1e-10
RTOL = 1e-10
SECTION_TOL = 1e-10
T_MAX = 1e3
CAPTURE_RADIUS = 1e-3


class FlowError(RuntimeError):
    pass


class CapturedError(FlowError):
    """The trajectory was captured by a sink or ran past ``T_max``."""


class StepUnderflowError(FlowError):
    pass


@dataclass
class FlowResult:
    points: np.ndarray  # end points in the cover, (N, 2)
    times: np.ndarray  # elapsed times, (N,)
    status: np.ndarray  # int codes, (N,)
    steps: np.ndarray  # accepted steps per trajectory

    @property
    def torus_points(self) -> np.ndarray:
        return np.mod(self.points, 1.0)

    @property
    def reached(self) -> np.ndarray:
        return self.status == REACHED

    def status_names(self) -> list:
        return [STATUS_NAMES[int(s)] for s in self.status]


def _dp_step(f, y, h):
    """One DOPRI step for all rows; returns 5th-order solution and error vector."""
    k = []
    for s in range(7):
        ys = y.copy()
        for j, a in enumerate(_A[s]):
            if a:
                ys += (h * a)[:, None] * k[j]
        k.append(f(ys))
    K = np.stack(k, axis=0)
    y5 = y + h[:, None] * np.tensordot(_B5, K, axes=1)
    err = h[:, None] * np.tensordot(_E, K, axes=1)
    return y5, err


def _torus_dist(P, q):
    d = np.mod(P - q + 0.5, 1.0) - 0.5
    return np.hypot(d[:, 0], d[:, 1])


def integrate(f: Callable[[np.ndarray], np.ndarray], P, *, t_end: float | None = None,
              section: float | np.ndarray | None = None, t_max: float = T_MAX, sinks=(),
              capture_radius: float = CAPTURE_RADIUS, atol: float = ATOL, rtol: float = RTOL,
              section_tol: float = SECTION_TOL, h0: float = 1e-3, max_iter: int = 200000) -> FlowResult:
    """Integrate ``dP/dt = f(P)`` from each row of ``P``.

    Exactly one of ``t_end`` (fixed time, any sign) and ``section`` (cover
    height to reach, scalar or per row) must be given.  In section mode a
    trajectory stops when captured (within ``capture_radius`` of a sink, on the
    torus) or when its time exceeds ``t_max``.
    """
    if (t_end is None) == (section is None):
        raise ValueError("give exactly one of t_end and section")
    Y = np.array(P, dtype=float, copy=True).reshape(-1, 2)
    N = len(Y)
    t = np.zeros(N)
    status = np.full(N, -1)
    steps = np.zeros(N, dtype=int)
    direction = 1.0
    if t_end is not None:
        direction = 1.0 if t_end >= 0 else -1.0
        if t_end == 0:
            return FlowResult(Y, t, np.full(N, REACHED), steps)
        target = None
    else:
        target = np.broadcast_to(np.asarray(section, dtype=float), (N,)).copy()
    sinks = [np.asarray(s, dtype=float) for s in sinks]
    h = np.full(N, direction * h0)
    for _ in range(max_iter):
        act = np.flatnonzero(status < 0)
        if act.size == 0:
            break
        y, hh = Y[act], h[act]
        clipped = np.zeros(act.size, dtype=bool)
        if t_end is not None:
            rem = t_end - t[act]
            clipped = np.abs(hh) > np.abs(rem)
            hh = np.where(clipped, rem, hh)
        y5, err = _dp_step(f, y, hh)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
        en = np.sqrt(np.mean((err / scale) ** 2, axis=1))
        en = np.where(np.isfinite(en), en, np.inf)
        ok = en <= 1.0
        fac = np.clip(0.9 * np.maximum(en, 1e-30) ** -0.2, 0.2, 5.0)
        fac = np.where(ok, fac, np.minimum(fac, 1.0))
        # accepted steps
        acc = act[ok]
        if acc.size:
            y_old = Y[acc]
            h_acc = hh[ok]
            y_new = y5[ok]
            if target is not None:
                crossed = (y_new[:, 1] - target[acc]) * (y_old[:, 1] - target[acc]) <= 0
                crossed &= y_old[:, 1] != target[acc]
                if np.any(crossed):
                    ci = acc[crossed]
                    yc, dt = _locate_crossing(f, y_old[crossed], h_acc[crossed], target[ci], section_tol)
                    Y[ci] = yc
                    t[ci] += dt
                    steps[ci] += 1
                    status[ci] = REACHED
                keep = ~crossed
                acc, y_new, h_acc = acc[keep], y_new[keep], h_acc[keep]
            Y[acc] = y_new
            t[acc] += h_acc
            steps[acc] += 1
            if t_end is not None:
                done = np.abs(t[acc] - t_end) <= 1e-15 * max(1.0, abs(t_end))
                t[acc[done]] = t_end
                status[acc[done]] = REACHED
            else:
                for s in sinks:
                    cap = _torus_dist(Y[acc], s) <= capture_radius
                    status[acc[cap & (status[acc] < 0)]] = CAPTURED
                over = (t[acc] > t_max) & (status[acc] < 0)
                status[acc[over]] = TMAX
        # a clipped final step that was accepted keeps the step size it replaced
        h[act] = np.where(clipped & ok, h[act], hh * fac)
        tiny = np.abs(h[act]) < 1e-14 * np.maximum(1.0, np.abs(t[act]))
        status[act[tiny & (status[act] < 0)]] = UNDERFLOW
    else:
        raise FlowError("integration did not finish within max_iter iterations")
    return FlowResult(Y, t, status, steps)


def _locate_crossing(f, y0, h, c, tol):
    """Bisect the step length so that ``|y - c| <= tol`` at the end of a partial step."""
    lo = np.zeros(len(y0))
    hi = h.copy()
    yc = np.empty_like(y0)
    dt = hi.copy()
    pending = np.ones(len(y0), dtype=bool)
    for _ in range(200):
        if not pending.any():
            break
        idx = np.flatnonzero(pending)
        mid = 0.5 * (lo[idx] + hi[idx])
        ym, _ = _dp_step(f, y0[idx], mid)
        g = ym[:, 1] - c[idx]
        close = np.abs(g) <= tol
        yc[idx[close]] = ym[close]
        dt[idx[close]] = mid[close]
        pending[idx[close]] = False
        g0 = y0[idx, 1] - c[idx]
        same = (g * g0 > 0) & ~close
        lo[idx[same]] = mid[same]
        other = ~same & ~close
        hi[idx[other]] = mid[other]
    if pending.any():
        idx = np.flatnonzero(pending)
        ym, _ = _dp_step(f, y0[idx], hi[idx])
        yc[idx] = ym
        dt[idx] = hi[idx]
    return yc, dt
