"""Expression language for coordinate functions.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'

Functions: sin cos tan exp log sqrt abs atan.  Constant: pi.  Any other
name is a variable, resolved later against a chart.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .jet import Jet, jet_space

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "atan")
CONSTANTS = {"pi": math.pi}


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


class DomainError(ValueError):
    """Evaluation left the domain of a function (log of 0, 1/0, ...)."""

    def __init__(self, message: str, subexpr: "Expr"):
        super().__init__(f"{message} in '{to_source(subexpr)}'")
        self.subexpr = subexpr


class UnknownIdentifierError(NameError):
    pass


# AST -----------------------------------------------------------------------------


class Expr:
    __slots__ = ()

    def __str__(self):
        return to_source(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Const(Expr):
    name: str


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


def Add(a, b):
    return BinOp("+", a, b)


def Sub(a, b):
    return BinOp("-", a, b)


def Mul(a, b):
    return BinOp("*", a, b)


def Div(a, b):
    return BinOp("/", a, b)


def Pow(a, b):
    return BinOp("^", a, b)


# parsing -----------------------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
)


def _tokenize(src: str):
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        elif kind != "ws":
            tokens.append((kind, text, line, col))
            col += len(text)
        else:
            col += len(text)
        pos = m.end()
    tokens.append(("end", "", line, col))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, t, line, col = self.take()
        if t != text:
            raise ExprSyntaxError(f"expected {text!r}, found {t or 'end of input'!r}", line, col)

    def parse(self) -> Expr:
        e = self.expr()
        kind, t, line, col = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {t!r}", line, col)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.unary())
        return e

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, t, line, col = self.take()
        if kind == "num":
            return Num(float(t))
        if kind == "name":
            if t in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(t, arg)
            if self.peek()[:2] == ("op", "("):
                raise ExprSyntaxError(f"unknown function {t!r}", line, col)
            if t in CONSTANTS:
                return Const(t)
            return Var(t)
        if t == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ExprSyntaxError(f"unexpected {t or 'end of input'!r}", line, col)


def parse(source: str) -> Expr:
    """Parse ``source`` into an expression tree."""
    if isinstance(source, Expr):
        return source
    return _Parser(source).parse()


# printing ----------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return 3
    return 5


def _fmt_num(v: float) -> str:
    if not math.isfinite(v):
        raise ValueError(f"cannot print non-finite literal {v}")
    if v.is_integer() and abs(v) < 1e16:
        s = str(int(v))
    else:
        s = repr(v)
    return f"({s})" if v < 0 else s


def to_source(e: Expr) -> str:
    """Pretty-print with the minimal parentheses that re-parse to ``e``."""
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, (Var, Const)):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_source(e.arg)})"
    if isinstance(e, Neg):
        inner = to_source(e.operand)
        return f"-{inner}" if _prec(e.operand) >= 3 else f"-({inner})"
    p = _PREC[e.op]
    left, right = to_source(e.left), to_source(e.right)
    if e.op == "^":
        if _prec(e.left) <= 4:
            left = f"({left})"
        if _prec(e.right) < 3:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    sep = " " if p == 1 else ""
    return f"{left}{sep}{e.op}{sep}{right}"


def free_vars(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, (Num, Const)):
        return frozenset()
    if isinstance(e, Neg):
        return free_vars(e.operand)
    if isinstance(e, Call):
        return free_vars(e.arg)
    return free_vars(e.left) | free_vars(e.right)


def check_bound(e: Expr, names: Sequence[str]) -> None:
    missing = sorted(free_vars(e) - set(names))
    if missing:
        raise UnknownIdentifierError(
            f"unknown identifier {missing[0]!r} in '{to_source(e)}' (chart coordinates: {', '.join(names)})"
        )


# evaluation --------------------------------------------------------------------


def _is_int(v: float) -> bool:
    return float(v).is_integer()


def evaluate(e: Expr, env: Mapping[str, float]):
    """Plain numeric evaluation; ``env`` values may be floats or arrays."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Const):
        return CONSTANTS[e.name]
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnknownIdentifierError(f"unknown identifier {e.name!r}") from None
    if isinstance(e, Neg):
        return -evaluate(e.operand, env)
    if isinstance(e, Call):
        a = np.asarray(evaluate(e.arg, env), dtype=float)
        return _apply_float(e, a)
    a = evaluate(e.left, env)
    b = evaluate(e.right, env)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        if np.any(np.asarray(b) == 0):
            raise DomainError("division by zero", e)
        return a / b
    return _pow_float(e, a, b)


def _pow_float(e, a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.all(b == np.round(b)):
        if np.any((a == 0) & (b < 0)):
            raise DomainError("division by zero", e)
        return a ** b
    if np.any(a <= 0):
        raise DomainError("non-integer power of a non-positive base", e)
    return a ** b


def _apply_float(e: Call, a):
    f = e.func
    if f == "log":
        if np.any(a <= 0):
            raise DomainError("log of a non-positive value", e)
        return np.log(a)
    if f == "sqrt":
        if np.any(a < 0):
            raise DomainError("sqrt of a negative value", e)
        return np.sqrt(a)
    if f == "tan":
        if np.any(np.cos(a) == 0):
            raise DomainError("tan at a pole", e)
        return np.tan(a)
    return {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs, "atan": np.arctan}[f](a)


def _jet_eval(e: Expr, env, space):
    if isinstance(e, Num):
        return Jet.constant(space, e.value)
    if isinstance(e, Const):
        return Jet.constant(space, CONSTANTS[e.name])
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnknownIdentifierError(f"unknown identifier {e.name!r}") from None
    if isinstance(e, Neg):
        return -_jet_eval(e.operand, env, space)
    if isinstance(e, Call):
        a = _jet_eval(e.arg, env, space)
        a0 = a.value
        f = e.func
        if f == "log":
            if np.any(a0 <= 0):
                raise DomainError("log of a non-positive value", e)
            return a.log()
        if f == "sqrt":
            if np.any(a0 < 0) or (space.order > 0 and np.any(a0 == 0)):
                raise DomainError("sqrt outside its differentiable domain", e)
            return a.sqrt() if space.order > 0 else Jet.constant(space, np.sqrt(a0))
        if f == "abs":
            if space.order > 0 and np.any(a0 == 0):
                raise DomainError("abs is not differentiable at 0", e)
            return a.abs()
        if f == "tan":
            if np.any(np.cos(a0) == 0):
                raise DomainError("tan at a pole", e)
            return a.tan()
        return getattr(a, f)()
    a = _jet_eval(e.left, env, space)
    if e.op == "^" and not free_vars(e.right):
        p = float(evaluate(e.right, {}))
        if _is_int(p):
            if p < 0 and np.any(a.value == 0):
                raise DomainError("division by zero", e)
            return a.ipow(int(p))
        if np.any(a.value <= 0):
            raise DomainError("non-integer power of a non-positive base", e)
        return a.rpow(p)
    b = _jet_eval(e.right, env, space)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        if np.any(b.value == 0):
            raise DomainError("division by zero", e)
        return a / b
    if np.any(a.value <= 0):
        raise DomainError("variable power of a non-positive base", e)
    return (b * a.log()).exp()


def eval_jet(e, point, order: int, variables: Sequence[str] | None = None) -> Jet:
    """Taylor jet of ``e`` at ``point`` up to total degree ``order``.

    ``point`` is either a mapping ``{name: value}`` or an array whose last axis
    runs over ``variables``; leading axes are evaluated as a batch.  The
    coefficient of multi-index ``a`` is ``(1/a!) d^a e``.
    """
    e = parse(e)
    if isinstance(point, Mapping):
        if variables is None:
            variables = tuple(point)
        point = [point[v] for v in variables]
    if variables is None:
        raise ValueError("variables are required when point is an array")
    variables = tuple(variables)
    check_bound(e, variables)
    point = np.asarray(point, dtype=float)
    space = jet_space(len(variables), order)
    xs = Jet.variables(space, point)
    env = {name: xs[..., i] for i, name in enumerate(variables)}
    out = _jet_eval(e, env, space)
    return out.broadcast_to(point.shape[:-1])


# compilation -------------------------------------------------------------------


def _codegen(e: Expr, names, table) -> str:
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Const):
        return repr(CONSTANTS[e.name])
    if isinstance(e, Var):
        return f"_v{names.index(e.name)}"
    if isinstance(e, Neg):
        return f"(-{_codegen(e.operand, names, table)})"
    if isinstance(e, Call):
        arg = _codegen(e.arg, names, table)
        if e.func in ("log", "sqrt", "tan"):
            table.append(e)
            return f"_checked_{e.func}({arg}, {len(table) - 1})"
        return f"_np.{ {'abs': 'abs', 'atan': 'arctan'}.get(e.func, e.func) }({arg})"
    a = _codegen(e.left, names, table)
    b = _codegen(e.right, names, table)
    if e.op in "+-*":
        return f"({a} {e.op} {b})"
    table.append(e)
    if e.op == "/":
        return f"_div({a}, {b}, {len(table) - 1})"
    return f"_pow({a}, {b}, {len(table) - 1})"


def compile_expr(e, variables: Sequence[str]):
    """Compile ``e`` to a fast numpy function of the positional ``variables``.

    The returned callable accepts floats or broadcastable arrays.  Domain
    violations raise :class:`DomainError` naming the offending subexpression.
    """
    e = parse(e)
    names = list(variables)
    check_bound(e, names)
    table: list = []
    body = _codegen(e, names, table)

    def _div(a, b, k):
        if np.any(np.asarray(b) == 0):
            raise DomainError("division by zero", table[k])
        return a / b

    def _pow(a, b, k):
        return _pow_float(table[k], a, b)

    def _checked_log(a, k):
        if np.any(np.asarray(a) <= 0):
            raise DomainError("log of a non-positive value", table[k])
        return np.log(a)

    def _checked_sqrt(a, k):
        if np.any(np.asarray(a) < 0):
            raise DomainError("sqrt of a negative value", table[k])
        return np.sqrt(a)

    def _checked_tan(a, k):
        return np.tan(a)

    ns = {"_np": np, "_div": _div, "_pow": _pow, "_checked_log": _checked_log,
          "_checked_sqrt": _checked_sqrt, "_checked_tan": _checked_tan}
    args = ", ".join(f"_v{i}" for i in range(len(names)))
    src = f"def _f({args}):\n    return {body}\n"
    exec(compile(src, f"<expr {to_source(e)[:40]}>", "exec"), ns)
    fn = ns["_f"]
    fn.source = to_source(e)
    return fn


# symbolic differentiation (used only to emit lifted objects as text) ------------------


def _is_num(e, v=None):
    return isinstance(e, Num) and (v is None or e.value == v)


def simplify_add(a, b):
    if _is_num(a, 0):
        return b
    if _is_num(b, 0):
        return a
    if _is_num(a) and _is_num(b):
        return Num(a.value + b.value)
    return Add(a, b)


def simplify_sub(a, b):
    if _is_num(b, 0):
        return a
    if _is_num(a, 0):
        return simplify_neg(b)
    if _is_num(a) and _is_num(b):
        return Num(a.value - b.value)
    return Sub(a, b)


def simplify_mul(a, b):
    if _is_num(a, 0) or _is_num(b, 0):
        return Num(0.0)
    if _is_num(a, 1):
        return b
    if _is_num(b, 1):
        return a
    if _is_num(a) and _is_num(b):
        return Num(a.value * b.value)
    return Mul(a, b)


def simplify_neg(a):
    if _is_num(a):
        return Num(-a.value) if a.value else Num(0.0)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def diff(e: Expr, var: str) -> Expr:
    """Symbolic partial derivative of ``e`` with respect to ``var``."""
    if isinstance(e, (Num, Const)):
        return Num(0.0)
    if isinstance(e, Var):
        return Num(1.0 if e.name == var else 0.0)
    if isinstance(e, Neg):
        return simplify_neg(diff(e.operand, var))
    if isinstance(e, Call):
        du = diff(e.arg, var)
        if _is_num(du, 0):
            return Num(0.0)
        u = e.arg
        outer = {
            "sin": lambda: Call("cos", u),
            "cos": lambda: Neg(Call("sin", u)),
            "tan": lambda: Add(Num(1.0), Pow(Call("tan", u), Num(2.0))),
            "exp": lambda: Call("exp", u),
            "log": lambda: Div(Num(1.0), u),
            "sqrt": lambda: Div(Num(0.5), Call("sqrt", u)),
            "abs": lambda: Div(u, Call("abs", u)),
            "atan": lambda: Div(Num(1.0), Add(Num(1.0), Pow(u, Num(2.0)))),
        }[e.func]()
        return simplify_mul(outer, du)
    a, b = e.left, e.right
    da, db = diff(a, var), diff(b, var)
    if e.op == "+":
        return simplify_add(da, db)
    if e.op == "-":
        return simplify_sub(da, db)
    if e.op == "*":
        return simplify_add(simplify_mul(da, b), simplify_mul(a, db))
    if e.op == "/":
        num = simplify_sub(simplify_mul(da, b), simplify_mul(a, db))
        return Div(num, Pow(b, Num(2.0))) if not _is_num(num, 0) else Num(0.0)
    if not free_vars(b):
        p = float(evaluate(b, {}))
        if p == 0:
            return Num(0.0)
        return simplify_mul(simplify_mul(Num(p), Pow(a, Num(p - 1.0))), da)
    # a^b = exp(b log a)
    inner = simplify_add(simplify_mul(db, Call("log", a)), simplify_mul(b, Div(da, a)))
    return simplify_mul(e, inner)


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, (Num, Const)):
        return e
    if isinstance(e, Neg):
        return Neg(substitute(e.operand, mapping))
    if isinstance(e, Call):
        return Call(e.func, substitute(e.arg, mapping))
    return BinOp(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
