"""Scene files: a strict sectioned key/value format describing charts, structures and torus objects.

A scene is INI-like text read with :mod:`configparser` in strict mode.  Each
section header is ``[kind NAME]`` (or ``[kind]`` for the singleton kinds
``scene``, ``tolerances`` and ``let``); keys are ``key = value`` lines and
``#`` starts a comment.  Every key is checked, so a misspelt key is an error
rather than silently ignored.  The grammar is documented in
``docs/scene_format.md``.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

from .expr import (Expr, ExprSyntaxError, Num, UnknownIdentifierError, Var, check_bound, diff, evaluate, parse,
                   simplify_add, simplify_mul, substitute, to_source)
from .geom import Chart, Map, OneForm, TwoForm, VectorField
from .structure import BiLagrangianStructure, Foliation, Tolerances
from .torus.circle import (CircleDiffeo, CircleMapWithFlat, diffeo_map, rotation_diffeo, rotation_map,
                           stretch_diffeo, synthetic_map)
from .torus.field import CHERRY_DEFAULTS, TorusDiffeo, TorusVectorField, cherry_exprs

SINGLETONS = ("scene", "tolerances", "let")
KINDS = SINGLETONS + ("chart", "vector", "form", "foliation", "structure", "diffeo", "torus", "cherry",
                      "torus-diffeo", "circle-diffeo", "circle-map")
ROLES = ("structure", "field", "map", "glue", "diffeo", "circle_diffeos")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_HEADER = re.compile(r"\s*\[([^\]]*)\]")
_KEY = re.compile(r"\s*([^=#;\s][^=]*?)\s*=")


class SceneError(ValueError):
    """A scene that fails to parse or validate; ``line`` is 1-based when known."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        where = f"{path or '<scene>'}" + (f":{line}" if line else "")
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line
        self.detail = message


@dataclass
class Scene:
    name: str = "scene"
    path: str | None = None
    seed: int = 0
    samples: int = 100
    fiber_box: tuple = (-1.0, 1.0)
    tolerances: Tolerances = field(default_factory=Tolerances)
    roles: dict = field(default_factory=dict)
    lets: dict = field(default_factory=dict)
    charts: dict = field(default_factory=dict)
    vectors: dict = field(default_factory=dict)
    forms: dict = field(default_factory=dict)
    form_entries: dict = field(default_factory=dict)  # 2-forms: {(i, j): Expr} with i < j
    foliations: dict = field(default_factory=dict)
    structures: dict = field(default_factory=dict)
    diffeos: dict = field(default_factory=dict)  # name -> (Map, Map)
    torus_fields: dict = field(default_factory=dict)
    torus_diffeos: dict = field(default_factory=dict)
    circle_diffeos: dict = field(default_factory=dict)
    circle_maps: dict = field(default_factory=dict)  # name -> spec dict, built on demand
    _built: dict = field(default_factory=dict, repr=False)

    def pick(self, kind: str, role: str | None = None):
        """The object of ``kind`` named by ``role`` in ``[scene]``, or the only one declared."""
        table = getattr(self, kind)
        if role and role in self.roles:
            name = self.roles[role]
            if isinstance(name, list):
                name = name[0]
            return name, table[name]
        if len(table) == 1:
            return next(iter(table.items()))
        what = kind.replace("_", " ")
        if not table:
            raise SceneError(f"scene declares no {what}", self.path)
        raise SceneError(f"scene declares several {what}; name one with '{role}' in [scene]", self.path)

    def circle_map(self, name: str, *, grid: int | None = None, tmax: float | None = None) -> CircleMapWithFlat:
        """Build (and cache) the circle map ``name``; return maps integrate their field."""
        spec = self.circle_maps[name]
        key = (name, grid, tmax)
        if key not in self._built:
            self._built[key] = _build_circle_map(self, name, spec, grid, tmax)
        return self._built[key]


# reading ---------------------------------------------------------------------------------------


def _line_index(text: str) -> dict:
    """``{(header, None): line, (header, key): line}`` for located error messages."""
    out = {}
    header = None
    for n, raw in enumerate(text.splitlines(), 1):
        m = _HEADER.match(raw)
        if m:
            header = m.group(1).strip()
            out.setdefault((header, None), n)
            continue
        if raw.strip().startswith(("#", ";")) or header is None:
            continue
        k = _KEY.match(raw)
        if k:
            out.setdefault((header, k.group(1)), n)
    return out


class _Reader:
    def __init__(self, text: str, path: str | None):
        self.path = path
        self.lets = {}
        self.lines = _line_index(text)
        cp = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#",), inline_comment_prefixes=("#",),
                                       strict=True, interpolation=None, default_section="\x00none")
        cp.optionxform = str
        try:
            cp.read_string(text, source=path or "<scene>")
        except configparser.Error as exc:
            line = getattr(exc, "lineno", None)
            msg = exc.message if hasattr(exc, "message") else str(exc)
            raise SceneError(msg.splitlines()[0], path, line) from None
        self.cp = cp
        self.sections = {}  # (kind, name) -> header
        for header in cp.sections():
            parts = header.split()
            kind = parts[0] if parts else ""
            if kind not in KINDS:
                raise self.error(f"unknown section kind {kind!r}", header)
            if kind in SINGLETONS:
                if len(parts) != 1:
                    raise self.error(f"[{kind}] takes no name", header)
                name = kind
            else:
                if len(parts) != 2 or not _NAME.match(parts[1]):
                    raise self.error(f"section [{kind}] needs one identifier name", header)
                name = parts[1]
            if any(n == name for (_, n) in self.sections) and kind not in SINGLETONS:
                raise self.error(f"name {name!r} declared twice", header)
            self.sections[(kind, name)] = header

    def error(self, message, header, key=None) -> SceneError:
        line = self.lines.get((header, key)) or self.lines.get((header, None))
        return SceneError(message, self.path, line)

    def of_kind(self, kind):
        return [(name, h) for (k, name), h in self.sections.items() if k == kind]

    def items(self, header) -> dict:
        return dict(self.cp.items(header))

    def check_keys(self, header, items, allowed, required=()):
        for k in items:
            if k not in allowed:
                raise self.error(f"unknown key {k!r} in [{header}]", header, k)
        for k in required:
            if k not in items:
                raise self.error(f"missing key {k!r} in [{header}]", header)

    def number(self, header, key, value, kind=float):
        """An integer literal, or for floats any constant expression (lets and ``pi`` allowed)."""
        if kind is int:
            try:
                return int(value)
            except ValueError:
                raise self.error(f"{key} = {value!r} is not an integer", header, key) from None
        e = self.expr(header, key, value, (), self.lets)
        try:
            return float(evaluate(e, {}))
        except (ValueError, ArithmeticError) as exc:
            raise self.error(f"{key}: {exc}", header, key) from None

    def expr(self, header, key, source, names, lets) -> Expr:
        try:
            e = parse(source)
        except ExprSyntaxError as exc:
            raise self.error(f"{key}: {exc}", header, key) from None
        e = substitute(e, lets)
        try:
            check_bound(e, names)
        except UnknownIdentifierError as exc:
            raise self.error(f"{key}: {exc}", header, key) from None
        return e

    def ref(self, header, key, value, table, what):
        if value not in table:
            raise self.error(f"{key} = {value!r} does not name a declared {what}", header, key)
        return table[value]


def _names(value: str) -> list:
    return [t for t in re.split(r"[,\s]+", value.strip()) if t]


def loads(text: str, path: str | None = None) -> Scene:
    """Parse and validate scene text."""
    R = _Reader(text, path)
    sc = Scene(path=path)
    _read_lets(R, sc)
    _read_scene(R, sc)
    _read_tolerances(R, sc)
    for name, h in R.of_kind("chart"):
        sc.charts[name] = _read_chart(R, h, name)
    for name, h in R.of_kind("vector"):
        sc.vectors[name] = _read_vector(R, sc, h)
    for name, h in R.of_kind("form"):
        sc.forms[name] = _read_form(R, sc, h, name)
    for name, h in R.of_kind("foliation"):
        sc.foliations[name] = _read_foliation(R, sc, h, name)
    for name, h in R.of_kind("structure"):
        sc.structures[name] = _read_structure(R, sc, h, name)
    for name, h in R.of_kind("diffeo"):
        sc.diffeos[name] = _read_diffeo(R, sc, h, name)
    for name, h in R.of_kind("torus"):
        items = R.items(h)
        _check_lets(R, sc, h, ("x", "y"))
        R.check_keys(h, items, ("xdot", "ydot"), ("xdot", "ydot"))
        xd = R.expr(h, "xdot", items["xdot"], ("x", "y"), sc.lets)
        yd = R.expr(h, "ydot", items["ydot"], ("x", "y"), sc.lets)
        sc.torus_fields[name] = _torus_field(R, h, name, xd, yd, None)
    for name, h in R.of_kind("cherry"):
        items = R.items(h)
        R.check_keys(h, items, tuple(CHERRY_DEFAULTS))
        p = dict(CHERRY_DEFAULTS, **{k: R.number(h, k, v) for k, v in items.items()})
        sc.torus_fields[name] = _torus_field(R, h, name, *cherry_exprs(**p), p)
    for name, h in R.of_kind("torus-diffeo"):
        sc.torus_diffeos[name] = _read_torus_diffeo(R, sc, h, name)
    for name, h in R.of_kind("circle-diffeo"):
        sc.circle_diffeos[name] = _read_circle_diffeo(R, sc, h, name)
    for name, h in R.of_kind("circle-map"):
        sc.circle_maps[name] = _read_circle_map(R, sc, h, name)
    _check_roles(R, sc)
    return sc


def load_scene(path) -> Scene:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SceneError(f"cannot read scene: {exc.strerror}", str(path)) from None
    return loads(text, str(path))


def _read_scene(R, sc):
    for _, h in R.of_kind("scene"):
        items = R.items(h)
        R.check_keys(h, items, ("name", "seed", "samples", "fiber_box") + ROLES)
        sc.name = items.get("name", sc.name)
        if "seed" in items:
            sc.seed = R.number(h, "seed", items["seed"], int)
        if "samples" in items:
            sc.samples = R.number(h, "samples", items["samples"], int)
            if sc.samples < 1:
                raise R.error("samples must be positive", h, "samples")
        if "fiber_box" in items:
            lo_hi = [R.number(h, "fiber_box", t) for t in _names(items["fiber_box"])]
            if len(lo_hi) != 2 or lo_hi[0] >= lo_hi[1]:
                raise R.error("fiber_box needs 'lo hi' with lo < hi", h, "fiber_box")
            sc.fiber_box = tuple(lo_hi)
        for role in ROLES:
            if role in items:
                names = _names(items[role])
                sc.roles[role] = names if role in ("glue", "circle_diffeos") else names[0]
    if sc.path and sc.name == "scene":
        sc.name = Path(sc.path).stem


def _read_tolerances(R, sc):
    for _, h in R.of_kind("tolerances"):
        items = R.items(h)
        R.check_keys(h, items, Tolerances.keys())
        sc.tolerances = sc.tolerances.override({k: R.number(h, k, v) for k, v in items.items()})


def _read_lets(R, sc):
    for _, h in R.of_kind("let"):
        for k, v in R.items(h).items():
            if not _NAME.match(k):
                raise R.error(f"let name {k!r} is not an identifier", h, k)
            sc.lets[k] = R.expr(h, k, v, (), sc.lets)
    R.lets = sc.lets


def _read_chart(R, h, name) -> Chart:
    items = R.items(h)
    R.check_keys(h, items, ("coords", "box"), ("coords",))
    coords = _names(items["coords"])
    for c in coords:
        if not _NAME.match(c):
            raise R.error(f"coordinate {c!r} is not an identifier", h, "coords")
    box = None
    if "box" in items:
        parts = [p for p in items["box"].split(",") if p.strip()]
        try:
            box = [tuple(float(t) for t in p.split()) for p in parts]
        except ValueError:
            raise R.error("box entries must be numbers", h, "box") from None
        if len(box) != len(coords) or any(len(b) != 2 or b[0] > b[1] for b in box):
            raise R.error(f"box needs {len(coords)} comma-separated 'lo hi' pairs", h, "box")
    try:
        return Chart(name, tuple(coords), box)
    except ValueError as exc:
        raise R.error(str(exc), h) from None


def _chart_of(R, sc, h, items, key="chart"):
    if key not in items:
        if len(sc.charts) == 1:
            return next(iter(sc.charts.values()))
        raise R.error(f"missing key {key!r} in [{h}]", h)
    return R.ref(h, key, items[key], sc.charts, "chart")


def _check_lets(R, sc, h, coords):
    clash = set(sc.lets) & set(coords)
    if clash:
        raise R.error(f"let name(s) {sorted(clash)} shadow coordinates {', '.join(coords)}", h)


def _read_vector(R, sc, h) -> VectorField:
    items = R.items(h)
    chart = _chart_of(R, sc, h, items)
    _check_lets(R, sc, h, chart.coords)
    R.check_keys(h, items, ("chart",) + chart.coords)
    comps = [R.expr(h, c, items[c], chart.coords, sc.lets) if c in items else Num(0.0) for c in chart.coords]
    return VectorField.from_exprs(chart, comps)


def _split_differentials(R, h, key, chart):
    parts = key.split("^")
    names = []
    for part in parts:
        part = part.strip()
        if not part.startswith("d") or part[1:] not in chart.coords:
            raise R.error(f"form key {key!r}: {part!r} is not d<coordinate> of chart {chart.name!r}", h, key)
        names.append(part[1:])
    return names


def _read_form(R, sc, h, name):
    items = R.items(h)
    chart = _chart_of(R, sc, h, items)
    _check_lets(R, sc, h, chart.coords)
    comps = {k: v for k, v in items.items() if k not in ("chart", "degree")}
    degree = R.number(h, "degree", items["degree"], int) if "degree" in items else None
    keyed = {k: _split_differentials(R, h, k, chart) for k in comps}
    degs = {len(v) for v in keyed.values()}
    if degree is None:
        if len(degs) != 1:
            raise R.error("cannot infer the form degree; add 'degree'", h)
        degree = degs.pop()
    if degree not in (1, 2) or any(len(v) != degree for v in keyed.values()):
        raise R.error(f"form entries must all have degree {degree} (1 or 2)", h)
    exprs = {k: R.expr(h, k, v, chart.coords, sc.lets) for k, v in comps.items()}
    if degree == 1:
        return OneForm.from_exprs(chart, [exprs.get(f"d{c}", Num(0.0)) for c in chart.coords])
    entries = {}
    for k, (a, b) in keyed.items():
        i, j = chart.index(a), chart.index(b)
        if i == j:
            raise R.error(f"form key {k!r} repeats a coordinate", h, k)
        key = (min(i, j), max(i, j))
        if key in entries:
            raise R.error(f"form entry {k!r} given twice", h, k)
        entries[key] = exprs[k] if i < j else simplify_mul(Num(-1.0), exprs[k])
    sc.form_entries[name] = entries
    return TwoForm.from_exprs(chart, entries)


def _read_foliation(R, sc, h, name) -> Foliation:
    items = R.items(h)
    chart = _chart_of(R, sc, h, items)
    R.check_keys(h, items, ("chart", "coords", "frame"))
    if ("coords" in items) == ("frame" in items):
        raise R.error("give exactly one of 'coords' and 'frame'", h)
    if "coords" in items:
        names = _names(items["coords"])
        for c in names:
            if c not in chart.coords:
                raise R.error(f"coords: unknown coordinate {c!r} of chart {chart.name!r}", h, "coords")
        return Foliation.coordinate(chart, names, name)
    frame = [R.ref(h, "frame", v, sc.vectors, "vector") for v in _names(items["frame"])]
    for X in frame:
        if X.chart != chart:
            raise R.error(f"frame field lives on chart {X.chart.name!r}, not {chart.name!r}", h, "frame")
    return Foliation(chart, frame, name)


def _read_structure(R, sc, h, name) -> BiLagrangianStructure:
    items = R.items(h)
    R.check_keys(h, items, ("chart", "omega", "F1", "F2"), ("omega", "F1", "F2"))
    omega = R.ref(h, "omega", items["omega"], sc.forms, "form")
    if not isinstance(omega, TwoForm):
        raise R.error(f"omega = {items['omega']!r} is not a 2-form", h, "omega")
    F1 = R.ref(h, "F1", items["F1"], sc.foliations, "foliation")
    F2 = R.ref(h, "F2", items["F2"], sc.foliations, "foliation")
    chart = _chart_of(R, sc, h, items) if "chart" in items else omega.chart
    for key, obj in (("omega", omega), ("F1", F1), ("F2", F2)):
        if obj.chart != chart:
            raise R.error(f"{key} lives on chart {obj.chart.name!r}, not {chart.name!r}", h, key)
    if chart.dim % 2:
        raise R.error(f"chart {chart.name!r} has odd dimension {chart.dim}", h)
    for key, F in (("F1", F1), ("F2", F2)):
        if F.rank != chart.dim // 2:
            raise R.error(f"{key} has rank {F.rank}, need {chart.dim // 2}", h, key)
    S = BiLagrangianStructure(chart, omega, F1, F2, name, sc.tolerances)
    S.source = {"omega": items["omega"], "F1": items["F1"], "F2": items["F2"]}
    return S


def _read_diffeo(R, sc, h, name):
    items = R.items(h)
    source = _chart_of(R, sc, h, items, "source")
    target = R.ref(h, "target", items["target"], sc.charts, "chart") if "target" in items else source
    fwd_keys = target.coords
    inv_keys = tuple(f"inverse.{c}" for c in source.coords)
    R.check_keys(h, items, ("source", "target") + fwd_keys + inv_keys, fwd_keys + inv_keys)
    fwd = [R.expr(h, c, items[c], source.coords, sc.lets) for c in fwd_keys]
    inv = [R.expr(h, k, items[k], target.coords, sc.lets) for k in inv_keys]
    return Map.from_exprs(source, target, fwd, name), Map.from_exprs(target, source, inv, name + "^-1")


def _torus_field(R, h, name, xd, yd, params):
    try:
        return TorusVectorField.from_exprs(xd, yd, name=name, params=params)
    except ValueError as exc:
        raise R.error(str(exc), h) from None


def _read_torus_diffeo(R, sc, h, name) -> TorusDiffeo:
    items = R.items(h)
    _check_lets(R, sc, h, ("x", "y"))
    keys = ("x", "y", "inverse.x", "inverse.y")
    R.check_keys(h, items, keys, keys)
    e = {k: R.expr(h, k, items[k], ("x", "y"), sc.lets) for k in keys}
    try:
        return TorusDiffeo.from_exprs([e["x"], e["y"]], [e["inverse.x"], e["inverse.y"]], name)
    except ValueError as exc:
        raise R.error(str(exc), h) from None


def _read_circle_diffeo(R, sc, h, name) -> CircleDiffeo:
    items = R.items(h)
    _check_lets(R, sc, h, ("x",))
    kind = items.get("kind", "expr")
    try:
        if kind == "expr":
            R.check_keys(h, items, ("kind", "lift", "inverse"), ("lift", "inverse"))
            lift = R.expr(h, "lift", items["lift"], ("x",), sc.lets)
            inv = R.expr(h, "inverse", items["inverse"], ("x",), sc.lets)
            return CircleDiffeo(lift, inv, name)
        if kind == "rotation":
            R.check_keys(h, items, ("kind", "c"), ("c",))
            return rotation_diffeo(R.number(h, "c", items["c"]), name)
        if kind == "stretch":
            R.check_keys(h, items, ("kind", "k", "shift"), ("k",))
            k = R.number(h, "k", items["k"])
            if k <= 0:
                raise R.error("stretch factor k must be positive", h, "k")
            return stretch_diffeo(k, R.number(h, "shift", items.get("shift", "0")), name)
    except ValueError as exc:
        if isinstance(exc, SceneError):
            raise
        raise R.error(str(exc), h) from None
    raise R.error(f"unknown circle-diffeo kind {kind!r} (expr, rotation, stretch)", h, "kind")


_MAP_KEYS = {
    "synthetic": (("a", "b", "v", "l1", "l2"), ("samples",)),
    "rotation": (("alpha",), ("samples",)),
    "lift": (("lift",), ("samples",)),
    "return": (("field",), ("grid", "tmax")),
}


def _read_circle_map(R, sc, h, name) -> dict:
    items = R.items(h)
    kind = items.get("kind")
    if kind not in _MAP_KEYS:
        raise R.error(f"circle-map needs kind = one of {', '.join(_MAP_KEYS)}", h, "kind" if kind else None)
    req, opt = _MAP_KEYS[kind]
    R.check_keys(h, items, ("kind",) + req + opt, req)
    spec = {"kind": kind, "header": h}
    for k, v in items.items():
        if k == "kind":
            continue
        if k == "lift":
            _check_lets(R, sc, h, ("x",))
            spec[k] = R.expr(h, k, v, ("x",), sc.lets)
        elif k == "field":
            R.ref(h, k, v, sc.torus_fields, "torus field")
            spec[k] = v
        elif k in ("samples", "grid"):
            spec[k] = R.number(h, k, v, int)
        else:
            spec[k] = R.number(h, k, v)
    if kind == "synthetic":
        try:
            synthetic_map(spec["a"], spec["b"], spec["v"], spec["l1"], spec["l2"], 8)
        except ValueError as exc:
            raise R.error(str(exc), h) from None
    return spec


def _build_circle_map(sc, name, spec, grid, tmax) -> CircleMapWithFlat:
    kind = spec["kind"]
    if kind == "synthetic":
        return synthetic_map(spec["a"], spec["b"], spec["v"], spec["l1"], spec["l2"], spec.get("samples", 512), name)
    if kind == "rotation":
        return rotation_map(spec["alpha"], spec.get("samples", 512), name)
    if kind == "lift":
        from .expr import compile_expr

        fn = compile_expr(spec["lift"], ("x",))
        return diffeo_map(lambda u: fn(u) + 0 * u, spec.get("samples", 512), name)
    from .torus.returnmap import return_map
    from .torus import integrate as _int

    X = sc.torus_fields[spec["field"]]
    return return_map(X, grid or spec.get("grid", 512), tmax or spec.get("tmax", _int.T_MAX), name=name)


def _check_roles(R, sc):
    tables = {"structure": sc.structures, "field": sc.torus_fields, "map": sc.circle_maps, "glue": sc.circle_maps,
              "diffeo": {**sc.diffeos, **sc.torus_diffeos}, "circle_diffeos": sc.circle_diffeos}
    h = R.sections.get(("scene", "scene"))
    for role, value in sc.roles.items():
        for v in value if isinstance(value, list) else [value]:
            if v not in tables[role]:
                raise R.error(f"{role} = {v!r} does not name a declared object of that kind", h, role)
    if "glue" in sc.roles and len(sc.roles["glue"]) != 2:
        raise R.error("glue needs exactly two circle-map names", h, "glue")


# emission of lifted structures -------------------------------------------------------------------


def _complete(e: Expr, coords, dots) -> Expr:
    """``e^c = ydot^i d_i e`` symbolically."""
    out = Num(0.0)
    for c, d in zip(coords, dots):
        out = simplify_add(out, simplify_mul(Var(d), diff(e, c)))
    return out


def _fmt_box(box) -> str:
    return ", ".join(f"{lo!r} {hi!r}" for lo, hi in box)


def _emit_chart(lines, name, coords, box):
    lines += [f"[chart {name}]", f"coords = {', '.join(coords)}", f"box = {_fmt_box(box)}", ""]


def _emit_vector(lines, name, chart, coords, comps):
    lines += [f"[vector {name}]", f"chart = {chart}"]
    lines += [f"{c} = {to_source(e)}" for c, e in zip(coords, comps) if not (isinstance(e, Num) and e.value == 0)]
    lines.append("")


def _emit_form(lines, name, chart, coords, entries):
    lines += [f"[form {name}]", f"chart = {chart}", "degree = 2"]
    for (i, j), e in sorted(entries.items()):
        if not (isinstance(e, Num) and e.value == 0):
            lines.append(f"d{coords[i]}^d{coords[j]} = {to_source(e)}")
    lines.append("")


def _structure_exprs(sc: Scene, S: BiLagrangianStructure):
    name = S.name
    src = getattr(S, "source", None)
    if src is None or src["omega"] not in sc.form_entries:
        raise SceneError(f"structure {name!r} has no symbolic form entries to emit", sc.path)
    frames = []
    for F in (S.F1, S.F2):
        if any(X.exprs is None for X in F.frame):
            raise SceneError(f"foliation {F.name!r} has a frame without expressions", sc.path)
        frames.append([X.exprs for X in F.frame])
    return sc.form_entries[src["omega"]], frames


def emit_tangent_scene(sc: Scene, S: BiLagrangianStructure) -> str:
    """Scene text for ``(TM, omega^c, F1^c, F2^c)`` built symbolically from ``S``."""
    entries, frames = _structure_exprs(sc, S)
    chart = S.chart
    m = chart.dim
    coords = chart.coords
    dots = tuple(f"{c}_dot" for c in coords)
    tc = f"T{chart.name}"
    lines = [f"# tangent lift of structure {S.name}", "[scene]", f"name = T{sc.name}", f"seed = {sc.seed}",
             f"samples = {sc.samples}", f"structure = T{S.name}", ""]
    _emit_chart(lines, tc, coords + dots, tuple(chart.box) + (sc.fiber_box,) * m)
    lifted = {}
    for (i, j), e in entries.items():
        lifted[(i, j)] = _complete(e, coords, dots)
        lifted[(i, m + j)] = e
        lifted[(m + i, j)] = e
    norm = {}
    for (i, j), e in lifted.items():
        norm[(min(i, j), max(i, j))] = e if i < j else simplify_mul(Num(-1.0), e)
    _emit_form(lines, f"omega_c", tc, coords + dots, norm)
    for label, frame in zip(("F1", "F2"), frames):
        names = []
        for n, comps in enumerate(frame, 1):
            cl = list(comps) + [_complete(e, coords, dots) for e in comps]
            vl = [Num(0.0)] * m + list(comps)
            _emit_vector(lines, f"{label}_{n}_c", tc, coords + dots, cl)
            _emit_vector(lines, f"{label}_{n}_v", tc, coords + dots, vl)
            names += [f"{label}_{n}_c"]
        names += [f"{label}_{n}_v" for n in range(1, len(frame) + 1)]
        lines += [f"[foliation {label}_c]", f"chart = {tc}", f"frame = {', '.join(names)}", ""]
    lines += [f"[structure T{S.name}]", "omega = omega_c", "F1 = F1_c", "F2 = F2_c", ""]
    return "\n".join(lines)


def emit_cotangent_scene(sc: Scene, S: BiLagrangianStructure, form: str = "dtheta") -> str:
    """Scene text for ``(T*M, d theta or pi^* omega + d theta, N*F1, N*F2)`` in an adapted chart."""
    chart = S.chart
    m = chart.dim
    coords = chart.coords
    xis = tuple(f"xi_{c}" for c in coords)
    idx = [S.F1.adapted_indices(), S.F2.adapted_indices()]
    if None in idx:
        raise SceneError(f"structure {S.name!r} is not in an adapted chart; conormal lifts need coordinate frames",
                         sc.path)
    tc = f"Tstar_{chart.name}"
    entries = {(i, m + i): Num(-1.0) for i in range(m)}  # d xi_i ^ dy^i = -dy^i ^ d xi_i
    if form == "mixed":
        base, _ = _structure_exprs(sc, S)
        entries.update(base)
    elif form != "dtheta":
        raise SceneError(f"unknown cotangent form {form!r}", sc.path)
    lines = [f"# cotangent lift ({form}) of structure {S.name}", "[scene]", f"name = Tstar{sc.name}",
             f"seed = {sc.seed}", f"samples = {sc.samples}", f"structure = Tstar{S.name}", ""]
    _emit_chart(lines, tc, coords + xis, tuple(chart.box) + (sc.fiber_box,) * m)
    _emit_form(lines, "omega_star", tc, coords + xis, entries)
    for label, ids in zip(("F1", "F2"), idx):
        names = [coords[i] for i in ids] + [xis[j] for j in range(m) if j not in ids]
        lines += [f"[foliation N{label}]", f"chart = {tc}", f"coords = {', '.join(names)}", ""]
    lines += [f"[structure Tstar{S.name}]", "omega = omega_star", "F1 = NF1", "F2 = NF2", ""]
    return "\n".join(lines)
