"""Command line interface: ``bilag COMMAND SCENE [flags]``.

Every command writes a JSON :class:`~bilag.report.VerificationReport` to
stdout (or ``--out``) and exits 0 when all checks pass, 1 when a check fails
and 2 on usage or scene errors.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from .report import VerificationReport
from .scene import Scene, SceneError, emit_cotangent_scene, emit_tangent_scene, load_scene
from .structure import StructureError, check_affine, check_hess, para_kahler, pushforward_structure
from .lifts import verify_cotangent_lift, verify_tangent_lift, verify_theorem1
from .torus import integrate as _int
from .torus.circle import CircleMapError, conjugate_map, critical_exponents, glue, rotation_number
from .torus.field import (PeriodicityError, TorusDiffeo, find_singularities, pushforward_torus_field, torus_grid,
                          validate_cherry)
from .torus.returnmap import ReturnMapError, return_map, return_map_report, verify_equivariance

FIT_R2_MIN = 0.98
COMMANDS = {}


def command(name):
    def register(fn):
        COMMANDS[name] = fn
        return fn

    return register


class UsageError(ValueError):
    pass


def _structure(sc: Scene):
    return sc.pick("structures", "structure")[1]


def _points(sc: Scene, S):
    return S.samples(sc.samples, sc.seed)


# structures -----------------------------------------------------------------------------------


@command("verify-structure")
def cmd_verify_structure(sc, args):
    S = _structure(sc)
    return S.verify(_points(sc, S), sc.tolerances)


@command("hess")
def cmd_hess(sc, args):
    S = _structure(sc)
    p = _points(sc, S)
    rep = check_hess(S, points=p, tol=sc.tolerances)
    aff = check_affine(S, p, sc.tolerances.affine)
    rep.data["max_curvature"] = aff.checks[0].residual
    rep.data["affine"] = aff.passed
    rep.data["christoffel_at_first_sample"] = S.hess.christoffel(p[:1], 0).value[0].tolist()
    return rep


@command("lift-tangent")
def cmd_lift_tangent(sc, args):
    S = _structure(sc)
    rep = verify_tangent_lift(S, n=sc.samples, seed=sc.seed, tol=sc.tolerances, fiber_box=sc.fiber_box)
    if args.emit:
        Path(args.emit).write_text(emit_tangent_scene(sc, S))
    return rep


@command("lift-cotangent")
def cmd_lift_cotangent(sc, args):
    S = _structure(sc)
    rep = VerificationReport(f"cotangent lifts of {S.name}")
    for form in ("dtheta", "mixed"):
        rep.section(verify_cotangent_lift(S, form, n=sc.samples, seed=sc.seed, tol=sc.tolerances,
                                          fiber_box=sc.fiber_box))
    if args.emit:
        Path(args.emit).write_text(emit_cotangent_scene(sc, S, args.form))
    return rep


@command("verify-theorem1")
def cmd_theorem1(sc, args):
    return verify_theorem1(_structure(sc), n=sc.samples, seed=sc.seed, tol=sc.tolerances, fiber_box=sc.fiber_box)


@command("para-kahler")
def cmd_para_kahler(sc, args):
    S = _structure(sc)
    return para_kahler(S).verify(_points(sc, S), sc.tolerances)


@command("pushforward")
def cmd_pushforward(sc, args):
    table = {**sc.diffeos, **sc.torus_diffeos}
    if "diffeo" in sc.roles:
        name = sc.roles["diffeo"]
    elif len(table) == 1:
        name = next(iter(table))
    else:
        raise SceneError("pushforward needs exactly one diffeo or 'diffeo = NAME' in [scene]", sc.path)
    obj = table[name]
    if isinstance(obj, TorusDiffeo):
        return _pushforward_torus(sc, obj)
    phi, phi_inv = obj
    S = _structure(sc)
    S2 = pushforward_structure(phi, phi_inv, S, points=phi.target.samples(sc.samples, sc.seed))
    p = S2.samples(sc.samples, sc.seed)
    rep = VerificationReport(f"pushforward of {S.name} by {name}")
    rep.section(S2.verify(p, sc.tolerances))
    rep.section(check_hess(S2, points=p, tol=sc.tolerances))
    return rep


def _pushforward_torus(sc, D: TorusDiffeo):
    X = sc.pick("torus_fields", "field")[1]
    Y = pushforward_torus_field(D, X)
    back = pushforward_torus_field(TorusDiffeo(D.phi_inv, D.phi, D.name + "^-1"), Y)
    P = torus_grid(32)
    rep = VerificationReport(f"pushforward of {X.name} by {D.name}")
    rep.add_max("inverse pushforward returns X", back(P) - X(P), sc.tolerances.inverse * 10, P,
                operation="pushforward_torus_field")
    rep.section(validate_cherry(Y))
    rep.data["singularities_before"] = [s.to_dict() for s in find_singularities(X)[0]]
    rep.data["singularities_after"] = [s.to_dict() for s in find_singularities(Y)[0]]
    return rep


# torus and circle maps --------------------------------------------------------------------------


def _field(sc):
    return sc.pick("torus_fields", "field")[1]


def _map(sc, args):
    """The scene's circle map, or the return map of its torus field."""
    if sc.circle_maps:
        name = sc.pick("circle_maps", "map")[0]
        return sc.circle_map(name, grid=args.grid, tmax=args.tmax)
    X = _field(sc)
    return return_map(X, args.grid or 512, args.tmax or _int.T_MAX)


def _write_csv(args, f):
    if args.csv:
        Path(args.csv).write_text(f.to_csv())


@command("cherry-validate")
def cmd_cherry_validate(sc, args):
    return validate_cherry(_field(sc))


@command("cherry-return-map")
def cmd_return_map(sc, args):
    X = _field(sc)
    if sc.circle_maps and sc.circle_maps[sc.pick("circle_maps", "map")[0]]["kind"] == "return":
        f = _map(sc, args)
    else:
        f = return_map(X, args.grid or 512, args.tmax or _int.T_MAX)
    rep = VerificationReport(f"return map of {X.name}")
    rep.section(validate_cherry(X))
    rep.section(return_map_report(X, f, sc.tolerances.limit_gap))
    _write_csv(args, f)
    return rep


@command("cherry-rho")
def cmd_rho(sc, args):
    f = _map(sc, args)
    N = args.iters
    est = rotation_number(f, N)
    long = rotation_number(f, 10 * N)
    rep = VerificationReport(f"rotation number of {f.name}")
    rep.add("enclosure width", est.width, 2.0 / N, operation="rotation_number")
    rep.add("second seed outside enclosure", 0.0 if est.contains(est.second_value) else 1.0, 0.0,
            operation="rotation_number", worst_point=[est.second_seed])
    outside = max(0.0, abs((long.raw - est.raw + 0.5) % 1.0 - 0.5) - est.width / 2)
    rep.add(f"rho({10 * N}) outside the enclosure by", outside, 0.0, operation="rotation_number")
    rep.data["rotation_number"] = est.to_dict()
    rep.data["long_run"] = long.to_dict()
    return rep


@command("cherry-exponents")
def cmd_exponents(sc, args):
    f = _map(sc, args)
    fit = critical_exponents(f)
    rep = VerificationReport(f"critical exponents of {f.name}")
    rep.add("R^2 of left fit", fit.r2_left, FIT_R2_MIN, comparator=">=", samples=fit.n_left,
            operation="critical_exponents")
    rep.add("R^2 of right fit", fit.r2_right, FIT_R2_MIN, comparator=">=", samples=fit.n_right,
            operation="critical_exponents")
    for side, est in (("l1", fit.l1), ("l2", fit.l2)):
        true = f.meta.get(f"{side}_true")
        if true is not None:
            rep.add(f"relative error of {side}", abs(est - true) / true, sc.tolerances.exponent,
                    operation="critical_exponents")
    rep.data["exponents"] = fit.to_dict()
    return rep


@command("cherry-glue")
def cmd_glue(sc, args):
    names = sc.roles.get("glue")
    if not names:
        if len(sc.circle_maps) != 2:
            raise SceneError("cherry-glue needs 'glue = f1, f2' in [scene] or exactly two circle maps", sc.path)
        names = list(sc.circle_maps)
    f1, f2 = (sc.circle_map(n, grid=args.grid, tmax=args.tmax) for n in names)
    tol = sc.tolerances
    g = glue(f1, f2, tol.limit_gap)
    rep = VerificationReport(f"glue of {f1.name} and {f2.name}")
    rep.add("flat piece vs (a1, b2)", max(abs(g.a - f1.a), abs(g.b - f2.b)), 0.0, operation="glue")
    rep.section(g.check(tol.limit_gap))
    e1, e2, eg = critical_exponents(f1), critical_exponents(f2), critical_exponents(g)
    rep.add("relative error l1(glue) vs l1(f1)", abs(eg.l1 - e1.l1) / e1.l1, tol.exponent, operation="glue")
    rep.add("relative error l2(glue) vs l2(f2)", abs(eg.l2 - e2.l2) / e2.l2, tol.exponent, operation="glue")
    rep.data["glued"] = g.summary()
    rep.data["exponents"] = {"f1": [e1.l1, e1.l2], "f2": [e2.l1, e2.l2], "glue": [eg.l1, eg.l2]}
    _write_csv(args, g)
    return rep


def _circle_diffeos(sc):
    names = sc.roles.get("circle_diffeos") or list(sc.circle_diffeos)
    if not names:
        raise SceneError("scene declares no circle-diffeo", sc.path)
    return [sc.circle_diffeos[n] for n in names]


@command("cherry-conjugate")
def cmd_conjugate(sc, args):
    f = _map(sc, args)
    N = args.iters
    rho = rotation_number(f, N)
    rep = VerificationReport(f"conjugates of {f.name}")
    xs = np.linspace(0.0, 1.0, 257)
    first = None
    for phi in _circle_diffeos(sc):
        g = conjugate_map(phi, f)
        first = first or g
        sub = VerificationReport(f"{phi.name} o {f.name} o {phi.name}^-1")
        sub.section(g.check(sc.tolerances.limit_gap))
        err = np.abs(g.lift(phi(xs)) - phi(f.lift(xs)))
        sub.add_max("g o phi - phi o f on grid", err, 1e-9, xs[:, None], operation="conjugate_map")
        r2 = rotation_number(g, N)
        sub.add("|rho(f) - rho(conjugate)|", abs(rho.value - r2.value), 2.0 / N + sc.tolerances.rho_slack,
                operation="conjugate_map")
        sub.data["rho_f"] = rho.value
        sub.data["rho_conjugate"] = r2.value
        sub.data["conjugate"] = g.summary()
        rep.section(sub)
    _write_csv(args, first)
    return rep


@command("cherry-equivariance")
def cmd_equivariance(sc, args):
    X = _field(sc)
    grid = args.grid or 512
    tmax = args.tmax or _int.T_MAX
    f = _map(sc, args) if sc.circle_maps else return_map(X, grid, tmax)
    rep = VerificationReport(f"equivariance of {X.name}")
    for phi in _circle_diffeos(sc):
        rep.section(verify_equivariance(phi, X, map_grid=grid, tol=sc.tolerances.equivariance, f=f, tmax=tmax))
    return rep


# driver ----------------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bilag", description="Numerical verification of bi-Lagrangian structures "
                                 "and Cherry flow return maps.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("scene", help="scene file (see docs/scene_format.md)")
    ap.add_argument("--out", help="write the JSON report here instead of stdout")
    ap.add_argument("--seed", type=int, help="sampling seed (overrides the scene)")
    ap.add_argument("--samples", type=int, help="number of sample points (overrides the scene)")
    ap.add_argument("--tol", action="append", default=[], metavar="KEY=VALUE", help="tolerance override")
    ap.add_argument("--iters", type=int, default=10_000, help="iterations for rotation numbers")
    ap.add_argument("--tmax", type=float, help="maximal transit time before a trajectory counts as captured")
    ap.add_argument("--grid", type=int, help="grid size of return maps")
    ap.add_argument("--csv", help="write x,f_x,t_x,in_delta plot data here")
    ap.add_argument("--emit", help="lift commands: write the lifted structure as a scene file here")
    ap.add_argument("--form", choices=("dtheta", "mixed"), default="dtheta",
                    help="lift-cotangent: which form to emit")
    return ap


def _apply_flags(sc: Scene, args) -> None:
    if args.seed is not None:
        sc.seed = args.seed
    if args.samples is not None:
        if args.samples < 1:
            raise UsageError("--samples must be positive")
        sc.samples = args.samples
    if args.iters < 1:
        raise UsageError("--iters must be positive")
    if args.grid is not None and args.grid < 8:
        raise UsageError("--grid must be at least 8")
    over = {}
    for item in args.tol:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--tol expects KEY=VALUE, got {item!r}")
        try:
            over[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"--tol {key}: {value!r} is not a number") from None
    try:
        sc.tolerances = sc.tolerances.override(over)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    for S in sc.structures.values():
        S.tol = sc.tolerances


@contextlib.contextmanager
def thread_limit():
    """Cap BLAS/OpenMP threads at ``BILAG_THREADS`` when set."""
    value = os.environ.get("BILAG_THREADS")
    if not value:
        yield
        return
    try:
        n = int(value)
    except ValueError:
        raise UsageError(f"BILAG_THREADS must be an integer, got {value!r}") from None
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=max(1, n)):
        yield


def _error_report(kind: str, message: str, command: str) -> str:
    return json.dumps({"schema": 1, "passed": False, "error": {"kind": kind, "message": message,
                                                                "operation": command}}, indent=2, sort_keys=True)


def run(argv=None) -> tuple:
    """Parse ``argv`` and run; returns ``(exit code, report or None)``."""
    args = build_parser().parse_args(argv)
    try:
        with thread_limit():
            sc = load_scene(args.scene)
            _apply_flags(sc, args)
            try:
                rep = COMMANDS[args.command](sc, args)
            except (StructureError, CircleMapError, ReturnMapError, PeriodicityError, _int.FlowError,
                    np.linalg.LinAlgError) as exc:
                print(_error_report(type(exc).__name__, str(exc), args.command), file=sys.stderr)
                return 1, None
    except (SceneError, UsageError, KeyError) as exc:
        print(_error_report(type(exc).__name__, str(exc.args[0]) if exc.args else "", args.command),
              file=sys.stderr)
        return 2, None
    rep.data.update({"command": args.command, "scene": sc.name, "seed": sc.seed, "samples": sc.samples,
                     "sampling": "scrambled Halton, scramble seeded by numpy default_rng(seed)",
                     "tolerances": {k: getattr(sc.tolerances, k) for k in sc.tolerances.keys()}})
    text = rep.to_json()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if not rep.passed:
        print(rep.summary(), file=sys.stderr)
    return (0 if rep.passed else 1), rep


def main(argv=None) -> int:
    return run(argv)[0]


if __name__ == "__main__":
    sys.exit(main())
