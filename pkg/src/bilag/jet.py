"""Truncated multivariate Taylor arithmetic.

A :class:`Jet` holds the Taylor coefficients of a scalar (or of an array of
scalars) around a base point, truncated at total degree ``order``.  The last
axis of ``Jet.c`` indexes monomials in graded order: degree 0 first, then the
``dim`` degree-1 monomials ``x_0, x_1, ...``, then degree 2 and so on.  Any
leading axes are batch/tensor axes and broadcast like numpy arrays.

Coefficients are Taylor coefficients, i.e. the entry for multi-index ``a`` is
``d^a f / a!``.
"""

from __future__ import annotations

import functools
import itertools
import math

import numpy as np

MAX_ORDER = 4


class SingularJetError(ArithmeticError):
    """A jet matrix is singular (or numerically so) at its base point."""


@functools.lru_cache(maxsize=None)
def jet_space(dim: int, order: int) -> "JetSpace":
    return JetSpace(dim, order)


class JetSpace:
    """Monomial bookkeeping for jets in ``dim`` variables up to ``order``."""

    def __init__(self, dim: int, order: int):
        if dim < 0 or order < 0:
            raise ValueError("dim and order must be non-negative")
        if order > MAX_ORDER:
            raise ValueError(f"jet order {order} exceeds the maximum {MAX_ORDER}")
        self.dim = dim
        self.order = order
        monos = []
        for d in range(order + 1):
            for combo in itertools.combinations_with_replacement(range(dim), d):
                alpha = [0] * dim
                for v in combo:
                    alpha[v] += 1
                monos.append(tuple(alpha))
        self.monomials = np.array(monos, dtype=int).reshape(len(monos), dim)
        self.index = {m: i for i, m in enumerate(monos)}
        self.size = len(monos)
        self.degree = self.monomials.sum(axis=1)
        self.factorial = np.array(
            [math.prod(math.factorial(k) for k in m) for m in monos], dtype=float
        )

        pi, pj, pk = [], [], []
        for i, a in enumerate(monos):
            for j, b in enumerate(monos):
                if self.degree[i] + self.degree[j] > order:
                    continue
                pi.append(i)
                pj.append(j)
                pk.append(self.index[tuple(x + y for x, y in zip(a, b))])
        self._pi = np.array(pi, dtype=int)
        self._pj = np.array(pj, dtype=int)
        gather = np.zeros((len(pk), self.size))
        gather[np.arange(len(pk)), pk] = 1.0
        self._gather = gather

    def __repr__(self):
        return f"JetSpace(dim={self.dim}, order={self.order})"

    def size_at(self, order: int) -> int:
        return math.comb(self.dim + order, order)

    @functools.cached_property
    def _deriv_tables(self):
        # d/dx_v maps coefficient of (b + e_v) in this space to b in order-1.
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        lower = jet_space(self.dim, self.order - 1)
        src = np.empty((self.dim, lower.size), dtype=int)
        fac = np.empty((self.dim, lower.size))
        for v in range(self.dim):
            for j, b in enumerate(map(tuple, lower.monomials)):
                up = list(b)
                up[v] += 1
                src[v, j] = self.index[tuple(up)]
                fac[v, j] = up[v]
        return src, fac

    def embedding(self, new_dim: int, var_map) -> np.ndarray:
        """Indices of this space's monomials inside ``jet_space(new_dim, order)``."""
        target = jet_space(new_dim, self.order)
        out = np.empty(self.size, dtype=int)
        for i, a in enumerate(map(tuple, self.monomials)):
            alpha = [0] * new_dim
            for v, k in zip(var_map, a):
                alpha[v] += k
            out[i] = target.index[tuple(alpha)]
        return out


class Jet:
    """Truncated Taylor expansion(s) sharing one :class:`JetSpace`."""

    __slots__ = ("space", "c")
    __array_priority__ = 100

    def __init__(self, space: JetSpace, c):
        c = np.asarray(c, dtype=float)
        if c.shape[-1:] != (space.size,):
            raise ValueError(f"coefficient axis has length {c.shape[-1:]}, expected {space.size}")
        self.space = space
        self.c = c

    # construction -----------------------------------------------------------

    @classmethod
    def constant(cls, space: JetSpace, value) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (space.size,))
        c[..., 0] = value
        return cls(space, c)

    @classmethod
    def variables(cls, space: JetSpace, point) -> "Jet":
        """Jets of the coordinate functions at ``point`` (shape ``(..., dim)``).

        Returns a jet of shape ``(..., dim)`` whose entry ``v`` is ``x_v``.
        """
        point = np.asarray(point, dtype=float)
        if point.shape[-1:] != (space.dim,):
            raise ValueError(f"point has {point.shape[-1:]} coordinates, expected {space.dim}")
        c = np.zeros(point.shape + (space.size,))
        c[..., 0] = point
        if space.order >= 1:
            idx = np.arange(space.dim)
            c[..., idx, 1 + idx] = 1.0
        return cls(space, c)

    @classmethod
    def stack(cls, jets, axis=0) -> "Jet":
        jets = list(jets)
        order = min(j.space.order for j in jets)
        space = jet_space(jets[0].space.dim, order)
        arrays = [j.truncate(order).c for j in jets]
        shape = np.broadcast_shapes(*(a.shape for a in arrays))
        arrays = [np.broadcast_to(a, shape) for a in arrays]
        if axis < 0:
            axis -= 1
        return cls(space, np.stack(arrays, axis=axis))

    # basic properties -------------------------------------------------------

    @property
    def order(self) -> int:
        return self.space.order

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def shape(self):
        return self.c.shape[:-1]

    @property
    def value(self) -> np.ndarray:
        return self.c[..., 0]

    @property
    def coeffs(self) -> np.ndarray:
        return self.c

    def coefficient(self, alpha) -> np.ndarray:
        return self.c[..., self.space.index[tuple(alpha)]]

    def partial(self, alpha) -> np.ndarray:
        """The partial derivative ``d^alpha`` at the base point."""
        i = self.space.index[tuple(alpha)]
        return self.c[..., i] * self.space.factorial[i]

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        if any(i is Ellipsis for i in idx):
            # keep the coefficient axis out of reach of the ellipsis
            return Jet(self.space, self.c[idx + (slice(None),)])
        return Jet(self.space, self.c[idx])

    def __len__(self):
        return self.shape[0]

    def __repr__(self):
        return f"Jet(dim={self.dim}, order={self.order}, shape={self.shape})"

    def reshape(self, *shape) -> "Jet":
        return Jet(self.space, self.c.reshape(*shape, self.space.size))

    def moveaxis(self, src, dst) -> "Jet":
        nd = len(self.shape)
        src = src % nd if isinstance(src, int) else [s % nd for s in src]
        dst = dst % nd if isinstance(dst, int) else [d % nd for d in dst]
        return Jet(self.space, np.moveaxis(self.c, src, dst))

    def broadcast_to(self, shape) -> "Jet":
        return Jet(self.space, np.broadcast_to(self.c, tuple(shape) + (self.space.size,)))

    def sum(self, axis) -> "Jet":
        if isinstance(axis, int):
            axis = (axis,)
        nd = len(self.shape)
        return Jet(self.space, self.c.sum(axis=tuple(a % nd for a in axis)))

    def transpose(self, *axes) -> "Jet":
        return Jet(self.space, np.transpose(self.c, tuple(axes) + (len(self.shape),)))

    @property
    def T(self) -> "Jet":
        nd = len(self.shape)
        axes = list(range(nd))
        axes[-1], axes[-2] = axes[-2], axes[-1]
        return self.transpose(*axes)

    # order / variable management --------------------------------------------

    def truncate(self, order: int) -> "Jet":
        if order == self.order:
            return self
        if order > self.order:
            raise ValueError(f"cannot raise jet order {self.order} to {order}")
        space = jet_space(self.dim, order)
        return Jet(space, self.c[..., : space.size])

    def embed(self, new_dim: int, var_map) -> "Jet":
        """Re-express in ``new_dim`` variables; variable ``v`` becomes ``var_map[v]``."""
        target = jet_space(new_dim, self.order)
        idx = self.space.embedding(new_dim, tuple(var_map))
        c = np.zeros(self.shape + (target.size,))
        c[..., idx] = self.c
        return Jet(target, c)

    def deriv(self, var: int) -> "Jet":
        src, fac = self.space._deriv_tables
        lower = jet_space(self.dim, self.order - 1)
        return Jet(lower, self.c[..., src[var]] * fac[var])

    def gradient(self) -> "Jet":
        """Jet of the gradient, one order lower, with a new trailing axis."""
        src, fac = self.space._deriv_tables
        lower = jet_space(self.dim, self.order - 1)
        return Jet(lower, self.c[..., src] * fac)

    # arithmetic -------------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.dim != self.dim:
                raise ValueError(f"jet dimension mismatch: {self.dim} vs {other.dim}")
            order = min(self.order, other.order)
            return self.truncate(order), other.truncate(order)
        return self, Jet.constant(self.space, other)

    def __add__(self, other):
        a, b = self._coerce(other)
        return Jet(a.space, a.c + b.c)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._coerce(other)
        return Jet(a.space, a.c - b.c)

    def __rsub__(self, other):
        a, b = self._coerce(other)
        return Jet(a.space, b.c - a.c)

    def __neg__(self):
        return Jet(self.space, -self.c)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.c * np.asarray(other, dtype=float)[..., None])
        a, b = self._coerce(other)
        sp = a.space
        if sp.order == 0:
            return Jet(sp, a.c * b.c)
        return Jet(sp, (a.c[..., sp._pi] * b.c[..., sp._pj]) @ sp._gather)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.c / np.asarray(other, dtype=float)[..., None])
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            return (p * self.log()).exp()
        p = float(p)
        if p.is_integer():
            return self.ipow(int(p))
        return self.rpow(p)

    def ipow(self, n: int) -> "Jet":
        if n < 0:
            return self.ipow(-n).reciprocal()
        result = Jet.constant(self.space, np.ones(self.shape))
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # univariate composition ---------------------------------------------------

    def compose_series(self, coeffs) -> "Jet":
        """``sum_k coeffs[k] * (self - self.value)**k`` with ``coeffs[k]`` arrays.

        ``coeffs[k]`` must be the k-th Taylor coefficient of the outer function
        at ``self.value`` (length ``order + 1``).
        """
        h = Jet(self.space, self.c.copy())
        h.c[..., 0] = 0.0
        out = Jet.constant(self.space, np.broadcast_to(coeffs[0], self.shape))
        power = h
        for k in range(1, self.order + 1):
            out = out + power * coeffs[k]
            if k < self.order:
                power = power * h
        return out

    def reciprocal(self) -> "Jet":
        a0 = self.value
        if np.any(a0 == 0):
            raise ZeroDivisionError("reciprocal of a jet with zero value")
        return self.compose_series([(-1.0) ** k / a0 ** (k + 1) for k in range(self.order + 1)])

    def exp(self) -> "Jet":
        e = np.exp(self.value)
        return self.compose_series([e / math.factorial(k) for k in range(self.order + 1)])

    def log(self) -> "Jet":
        a0 = self.value
        coeffs = [np.log(a0)]
        coeffs += [(-1.0) ** (k - 1) / (k * a0 ** k) for k in range(1, self.order + 1)]
        return self.compose_series(coeffs)

    def sin(self) -> "Jet":
        s, c = np.sin(self.value), np.cos(self.value)
        cycle = [s, c, -s, -c]
        return self.compose_series([cycle[k % 4] / math.factorial(k) for k in range(self.order + 1)])

    def cos(self) -> "Jet":
        s, c = np.sin(self.value), np.cos(self.value)
        cycle = [c, -s, -c, s]
        return self.compose_series([cycle[k % 4] / math.factorial(k) for k in range(self.order + 1)])

    def tan(self) -> "Jet":
        return self.sin() / self.cos()

    def atan(self) -> "Jet":
        # atan(a0 + h) = atan(a0) + Im sum_k (-1)^(k-1)/k (i h / (1 + i a0))^k
        a0 = self.value
        z = 1j / (1.0 + 1j * a0)
        coeffs = [np.arctan(a0)]
        coeffs += [np.imag((-1.0) ** (k - 1) / k * z ** k) for k in range(1, self.order + 1)]
        return self.compose_series(coeffs)

    def rpow(self, p: float) -> "Jet":
        """Real power ``self**p`` for a base with positive value."""
        a0 = self.value
        coeffs = []
        binom = 1.0
        for k in range(self.order + 1):
            coeffs.append(binom * a0 ** (p - k))
            binom *= (p - k) / (k + 1)
        return self.compose_series(coeffs)

    def sqrt(self) -> "Jet":
        return self.rpow(0.5)

    def abs(self) -> "Jet":
        return self * np.sign(self.value)


# jet linear algebra ----------------------------------------------------------------


def einsum(subscripts: str, a: Jet, b: Jet) -> Jet:
    """Two-operand einsum over the tensor axes, with jet products elementwise.

    Subscripts refer to the tensor axes only and must use ``...`` for any
    leading batch axes, e.g. ``"...ij,...jk->...ik"``.
    """
    if not isinstance(b, Jet):
        b = Jet.constant(a.space, b)
    if not isinstance(a, Jet):
        a = Jet.constant(b.space, a)
    a, b = a._coerce(b)
    sp = a.space
    lhs, out = subscripts.replace(" ", "").split("->")
    sa, sb = lhs.split(",")
    if sp.order == 0:
        return Jet(sp, np.einsum(f"{sa}Z,{sb}Z->{out}Z", a.c, b.c))
    prod = np.einsum(f"{sa}Z,{sb}Z->{out}Z", a.c[..., sp._pi], b.c[..., sp._pj])
    return Jet(sp, prod @ sp._gather)


def inv(a: Jet, *, cond_limit: float = 1e12) -> Jet:
    """Inverse of a jet-valued square matrix (last two tensor axes)."""
    a0 = a.value
    s = np.linalg.svd(a0, compute_uv=False)
    bad = s[..., -1] <= s[..., 0] / cond_limit
    if np.any(bad) or np.any(s[..., -1] == 0):
        where = np.argwhere(np.atleast_1d(bad))
        raise SingularJetError(f"singular jet matrix at batch index {where[:1].tolist()}")
    a0inv = np.linalg.inv(a0)
    x = Jet.constant(a.space, a0inv)
    if a.order == 0:
        return x
    ah = Jet(a.space, a.c.copy())
    ah.c[..., 0] = 0.0
    step = -einsum("...ij,...jk->...ik", x, ah)
    term = x
    total = x
    for _ in range(a.order):
        term = einsum("...ij,...jk->...ik", step, term)
        total = total + term
    return total


def compose(outer: Jet, inner: Jet) -> Jet:
    """Substitute ``inner`` (shape ``(N, outer.dim)``) into ``outer``.

    ``outer`` has shape ``(N, *T)`` and is expanded around ``inner.value``;
    the result is expressed in ``inner``'s variables.
    """
    if inner.shape[-1] != outer.dim:
        raise ValueError("inner jet must supply one component per outer variable")
    order = min(outer.order, inner.order)
    outer = outer.truncate(order)
    inner = inner.truncate(order)
    sp_in = inner.space
    n_batch = inner.shape[:-1]
    h = Jet(sp_in, inner.c.copy())
    h.c[..., 0] = 0.0
    comps = [h[..., v] for v in range(outer.dim)]
    # monomial products h^alpha in graded order
    prods = [Jet.constant(sp_in, np.ones(n_batch))]
    for alpha in map(tuple, outer.space.monomials[1:]):
        v = next(i for i, k in enumerate(alpha) if k)
        lower = list(alpha)
        lower[v] -= 1
        prods.append(prods[outer.space.index[tuple(lower)]] * comps[v])
    p = np.stack([q.c for q in prods], axis=-2)  # (*batch, n_outer, n_inner)
    nb = len(n_batch)
    tshape = outer.shape[nb:]
    oc = outer.c.reshape(n_batch + (-1, outer.space.size))
    out = np.einsum("...ta,...ab->...tb", oc, p)
    return Jet(sp_in, out.reshape(n_batch + tshape + (sp_in.size,)))
