"""Exact graded-commutative algebra of superfunctions.

A superfunction on the superspace with even coordinates ``x1..xn`` and odd
coordinates ``th1..thn`` is stored as a polynomial in the odd generators whose
coefficients are rational functions of the even coordinates.  A context may
also carry ``m`` auxiliary odd constants ``p1..pm``; they multiply like the
``th``'s but every differential operator treats them as constants.

Odd monomials are stored as integer bitmasks: bit ``i`` is ``th(i+1)`` for
``i < n`` and bit ``n + j`` is ``p(j+1)``.  A set bit list read in ascending
order is the canonical ordering of the monomial (``th``'s before ``p``'s).

Nothing in this module uses floating point.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from sympy import QQ
from sympy.polys.rings import ring as _sympy_ring

__all__ = [
    "VarContext",
    "CoeffFunction",
    "SuperFunction",
    "GrassmannNumber",
    "SuperMatrix",
    "GrassmannError",
    "ContextMismatch",
    "ParityError",
    "NotInvertible",
    "NotASquare",
    "PoleError",
    "multiply",
    "derivative",
    "substitute",
    "invert_even",
    "invert_unit",
    "sqrt_even",
    "determinant",
    "berezinian",
    "berezin_integral",
    "evaluate",
    "random_superfunction",
    "random_polynomial",
    "solve_linear",
    "matrix_inverse",
]


class GrassmannError(ValueError):
    """Base class for algebraic errors raised by the core."""


class ContextMismatch(GrassmannError):
    pass


class ParityError(GrassmannError):
    pass


class NotInvertible(GrassmannError):
    pass


class NotASquare(GrassmannError):
    pass


class PoleError(GrassmannError):
    pass


# ---------------------------------------------------------------------------
# coefficient field
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def coefficient_ring(n: int):
    """Polynomial ring Q[x1..xn]; rings are shared by every context of size n."""
    if n < 1:
        raise ValueError("need at least one even variable")
    return _sympy_ring([f"_x{i}" for i in range(n)], QQ)[0]


def _qq(q) -> object:
    if isinstance(q, Fraction):
        return QQ(q.numerator, q.denominator)
    if isinstance(q, int):
        return QQ(q)
    return q


def _fraction(c) -> Fraction:
    return Fraction(int(c.numerator), int(c.denominator))


class CoeffFunction:
    """Reduced rational function ``num/den`` over Q with a monic denominator."""

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num, den=None, _reduced=False):
        R = num.ring
        if den is None:
            den = R.one
        if not _reduced:
            if not den:
                raise ZeroDivisionError("zero denominator")
            if not num:
                den = R.one
            elif den != R.one:
                num, den = num.cancel(den)
                lc = den.LC
                if lc != 1:
                    inv = QQ(1) / lc
                    num = num.mul_ground(inv)
                    den = den.mul_ground(inv)
        self.num = num
        self.den = den
        self._hash = None

    @property
    def ring(self):
        return self.num.ring

    @classmethod
    def const(cls, R, q) -> "CoeffFunction":
        return cls(R(_qq(q)), R.one, _reduced=True)

    @classmethod
    def gen(cls, R, i: int) -> "CoeffFunction":
        return cls(R.gens[i], R.one, _reduced=True)

    def is_polynomial(self) -> bool:
        return self.den == self.ring.one

    def is_constant(self) -> bool:
        return self.is_polynomial() and self.num.is_ground

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("coefficient is not a constant")
        return _fraction(self.num.LC) if self.num else Fraction(0)

    def _coerce(self, other) -> "CoeffFunction":
        if isinstance(other, CoeffFunction):
            return other
        if isinstance(other, (int, Fraction)):
            return CoeffFunction.const(self.ring, other)
        return NotImplemented

    def __bool__(self):
        return bool(self.num)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = CoeffFunction.const(self.ring, other)
        if not isinstance(other, CoeffFunction):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((tuple(sorted(self.num.items())), tuple(sorted(self.den.items()))))
        return self._hash

    def __neg__(self):
        return CoeffFunction(-self.num, self.den, _reduced=True)

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        one = self.ring.one
        if self.den == one and other.den == one:
            return CoeffFunction(self.num + other.num, one, _reduced=True)
        if self.den == other.den:
            return CoeffFunction(self.num + other.num, self.den)
        return CoeffFunction(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        one = self.ring.one
        if self.den == one and other.den == one:
            return CoeffFunction(self.num * other.num, one, _reduced=True)
        return CoeffFunction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def inverse(self) -> "CoeffFunction":
        if not self.num:
            raise NotInvertible("zero coefficient has no inverse")
        return CoeffFunction(self.den, self.num)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def diff(self, i: int) -> "CoeffFunction":
        x = self.ring.gens[i]
        if self.den == self.ring.one:
            return CoeffFunction(self.num.diff(x), self.den, _reduced=True)
        num = self.num.diff(x) * self.den - self.num * self.den.diff(x)
        return CoeffFunction(num, self.den ** 2)

    def evaluate(self, point: Sequence[Fraction]) -> Fraction:
        den = _eval_poly(self.den, point)
        if den == 0:
            raise PoleError("denominator vanishes at the evaluation point")
        return _eval_poly(self.num, point) / den

    def sqrt(self) -> "CoeffFunction":
        """Exact square root when numerator and denominator are perfect squares."""
        return CoeffFunction(_poly_sqrt(self.num), _poly_sqrt(self.den))

    def __repr__(self):
        return f"CoeffFunction({self.num!r}, {self.den!r})"


def _eval_poly(p, point) -> Fraction:
    total = Fraction(0)
    for monom, c in p.terms():
        term = _fraction(c)
        for v, e in zip(point, monom):
            if e:
                term *= Fraction(v) ** e
        total += term
    return total


def _poly_sqrt(p):
    if p.is_ground:
        q = _fraction(p.LC) if p else Fraction(0)
        return p.ring(_qq(_rational_sqrt(q)))
    const, factors = p.factor_list()
    root = p.ring(_qq(_rational_sqrt(_fraction(const))))
    for fac, mult in factors:
        if mult % 2:
            raise NotASquare("coefficient is not a perfect square")
        root = root * fac ** (mult // 2)
    return root


def _rational_sqrt(q: Fraction) -> Fraction:
    if q < 0:
        raise NotASquare(f"{q} has no rational square root")
    a, b = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if a * a != q.numerator or b * b != q.denominator:
        raise NotASquare(f"{q} is not the square of a rational")
    return Fraction(a, b)


# ---------------------------------------------------------------------------
# variable context
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VarContext:
    """Coordinates x1..xn, th1..thn and auxiliary odd constants p1..pm."""

    n: int
    m: int = 0
    even_names: tuple[str, ...] | None = None
    odd_names: tuple[str, ...] | None = None
    aux_names: tuple[str, ...] | None = None
    _ring: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.m < 0:
            raise ValueError("m must be >= 0")
        if self.even_names is None:
            object.__setattr__(self, "even_names", tuple(f"x{i + 1}" for i in range(self.n)))
        if self.odd_names is None:
            object.__setattr__(self, "odd_names", tuple(f"th{i + 1}" for i in range(self.n)))
        if self.aux_names is None:
            object.__setattr__(self, "aux_names", tuple(f"p{j + 1}" for j in range(self.m)))
        if len(self.even_names) != self.n or len(self.odd_names) != self.n or len(self.aux_names) != self.m:
            raise ValueError("name table does not match n, m")
        names = self.even_names + self.odd_names + self.aux_names
        if len(set(names)) != len(names):
            raise ValueError("coordinate names must be unique")
        object.__setattr__(self, "_ring", coefficient_ring(self.n))

    @classmethod
    def named(cls, n: int, m: int = 0, *, start: int = 1, even: str = "x", odd: str = "th",
              aux: str = "p") -> "VarContext":
        return cls(n, m,
                   tuple(f"{even}{i + start}" for i in range(n)),
                   tuple(f"{odd}{i + start}" for i in range(n)),
                   tuple(f"{aux}{j + 1}" for j in range(m)))

    @property
    def ring(self):
        return self._ring

    @property
    def theta_bits(self) -> int:
        return (1 << self.n) - 1

    @property
    def aux_bits(self) -> int:
        return ((1 << self.m) - 1) << self.n

    @property
    def top_mask(self) -> int:
        return self.theta_bits

    def generator_names(self) -> tuple[str, ...]:
        return self.odd_names + self.aux_names

    def coordinate_name(self, A: int) -> str:
        return self.even_names[A] if A < self.n else self.odd_names[A - self.n]

    def coordinate_index(self, name: str) -> int:
        if name in self.even_names:
            return self.even_names.index(name)
        if name in self.odd_names:
            return self.n + self.odd_names.index(name)
        raise KeyError(name)

    # element constructors --------------------------------------------------
    def coeff(self, q) -> CoeffFunction:
        return CoeffFunction.const(self.ring, q)

    def const(self, q) -> "SuperFunction":
        return SuperFunction(self, {0: self.coeff(q)})

    @property
    def zero(self) -> "SuperFunction":
        return SuperFunction(self, {})

    @property
    def one(self) -> "SuperFunction":
        return self.const(1)

    def x(self, i: int) -> "SuperFunction":
        """Even coordinate with 0-based index ``i``."""
        return SuperFunction(self, {0: CoeffFunction.gen(self.ring, i)})

    def theta(self, i: int) -> "SuperFunction":
        return SuperFunction(self, {1 << i: self.coeff(1)})

    def pi(self, j: int) -> "SuperFunction":
        return SuperFunction(self, {1 << (self.n + j): self.coeff(1)})

    def coordinate(self, A: int) -> "SuperFunction":
        return self.x(A) if A < self.n else self.theta(A - self.n)

    def coordinates(self) -> list["SuperFunction"]:
        return [self.coordinate(A) for A in range(2 * self.n)]

    def coordinate_parity(self, A: int) -> int:
        return 0 if A < self.n else 1

    def monomial(self, *gens: int) -> "SuperFunction":
        """Product of odd generators given by bit index, in the given order."""
        out = self.one
        for g in gens:
            out = out * SuperFunction(self, {1 << g: self.coeff(1)})
        return out

    def reduced(self, drop: int = 0) -> "VarContext":
        """Context with the coordinate pair ``(x, th)`` number ``drop`` removed."""
        if self.n < 2:
            raise ValueError("cannot reduce a one-dimensional context")
        keep = [i for i in range(self.n) if i != drop]
        return VarContext(self.n - 1, self.m,
                          tuple(self.even_names[i] for i in keep),
                          tuple(self.odd_names[i] for i in keep),
                          self.aux_names)


# ---------------------------------------------------------------------------
# graded elements
# ---------------------------------------------------------------------------

@lru_cache(maxsize=1 << 16)
def _reorder_sign(a: int, b: int) -> int:
    """Sign of sorting the concatenated monomial ``a . b`` into canonical order."""
    swaps = 0
    bb = b
    while bb:
        low = bb & -bb
        swaps += (a >> low.bit_length()).bit_count()
        bb ^= low
    return -1 if swaps & 1 else 1


def _mask_str(ctx: VarContext, mask: int) -> str:
    names = ctx.generator_names()
    return "*".join(names[k] for k in range(ctx.n + ctx.m) if mask >> k & 1)


def _term_order(mask: int):
    bits = [k for k in range(mask.bit_length()) if mask >> k & 1]
    return (len(bits), bits)


class _Graded:
    """Shared arithmetic for :class:`SuperFunction` and :class:`GrassmannNumber`."""

    __slots__ = ("ctx", "terms", "_hash")

    def __init__(self, ctx: VarContext, terms: dict):
        self.ctx = ctx
        self.terms = {k: v for k, v in terms.items() if v}
        self._hash = None

    # subclass hooks
    def _scalar(self, q):
        raise NotImplementedError

    def _new(self, terms):
        return type(self)(self.ctx, terms)

    def _coerce(self, other):
        if isinstance(other, type(self)):
            if other.ctx != self.ctx:
                raise ContextMismatch("operands live in different variable contexts")
            return other
        if isinstance(other, (int, Fraction)) or type(other) is self._coeff_type():
            return self._new({0: self._scalar(other)})
        return NotImplemented

    @staticmethod
    def _coeff_type():
        raise NotImplementedError

    # comparisons ---------------------------------------------------------------
    def __eq__(self, other):
        try:
            other = self._coerce(other)
        except ContextMismatch:
            return False
        if other is NotImplemented:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ctx, frozenset(self.terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    # grading -------------------------------------------------------------------
    def parity(self) -> int | None:
        """0 or 1 for homogeneous elements (zero counts as even), None if mixed."""
        ps = {m.bit_count() & 1 for m in self.terms}
        if not ps:
            return 0
        if len(ps) == 1:
            return ps.pop()
        return None

    def is_even(self) -> bool:
        return all(m.bit_count() % 2 == 0 for m in self.terms)

    def is_odd(self) -> bool:
        return all(m.bit_count() % 2 == 1 for m in self.terms)

    def even_part(self):
        return self._new({m: c for m, c in self.terms.items() if m.bit_count() % 2 == 0})

    def odd_part(self):
        return self._new({m: c for m, c in self.terms.items() if m.bit_count() % 2 == 1})

    def homogeneous_parts(self):
        """List of ``(parity, part)`` for the nonzero homogeneous components."""
        out = []
        for p, part in ((0, self.even_part()), (1, self.odd_part())):
            if part:
                out.append((p, part))
        return out

    def body(self):
        return self.terms.get(0, self._scalar(0))

    def soul(self):
        return self._new({m: c for m, c in self.terms.items() if m})

    def coefficient(self, mask: int):
        return self.terms.get(mask, self._scalar(0))

    def monomials(self):
        """Canonical ``(generator tuple, coefficient)`` pairs, sorted for printing."""
        for mask in sorted(self.terms, key=_term_order):
            yield tuple(k for k in range(mask.bit_length()) if mask >> k & 1), self.terms[mask]

    # ring operations -----------------------------------------------------------
    def __neg__(self):
        return self._new({m: -c for m, c in self.terms.items()})

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            if m in out:
                out[m] = out[m] + c
            else:
                out[m] = c
        return self._new(out)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                if ma & mb:
                    continue
                c = ca * cb
                if _reorder_sign(ma, mb) < 0:
                    c = -c
                key = ma | mb
                if key in out:
                    out[key] = out[key] + c
                else:
                    out[key] = c
        return self._new(out)

    def __rmul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other * self

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a nonnegative integer")
        out = self._new({0: self._scalar(1)})
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def scale(self, c):
        """Multiply every coefficient by the commuting scalar ``c``."""
        return self._new({m: v * c for m, v in self.terms.items()})

    def left_odd_derivative(self, bit: int):
        """Left derivative with respect to the odd generator at ``bit``."""
        out = {}
        mbit = 1 << bit
        below = mbit - 1
        for m, c in self.terms.items():
            if m & mbit:
                out[m ^ mbit] = -c if (m & below).bit_count() & 1 else c
        return self._new(out)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(1 / Fraction(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * invert_even(other)

    def __rtruediv__(self, other):
        return invert_even(self) * other

    def __str__(self):
        return self.ctx_format()

    def __repr__(self):
        return f"{type(self).__name__}({self})"


class SuperFunction(_Graded):
    """A polynomial in odd generators with rational-function coefficients."""

    __slots__ = ()

    @staticmethod
    def _coeff_type():
        return CoeffFunction

    def _scalar(self, q):
        if isinstance(q, CoeffFunction):
            return q
        return CoeffFunction.const(self.ctx.ring, q)

    def ctx_format(self) -> str:
        from .parser import format_superfunction
        return format_superfunction(self)

    def depends_on_coordinates(self) -> bool:
        """True when some coefficient depends on an x or some monomial contains a th."""
        tb = self.ctx.theta_bits
        return any((m & tb) or not c.is_constant() for m, c in self.terms.items())

    def is_constant(self) -> bool:
        return not self.depends_on_coordinates()


class GrassmannNumber(_Graded):
    """A superfunction evaluated at a rational point: rational coefficients only."""

    __slots__ = ()

    @staticmethod
    def _coeff_type():
        return Fraction

    def _scalar(self, q):
        return Fraction(q)

    def ctx_format(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for gens, c in self.monomials():
            mask = sum(1 << g for g in gens)
            mono = _mask_str(self.ctx, mask)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


def _check_ctx(*fs):
    ctx = fs[0].ctx
    for f in fs[1:]:
        if f.ctx != ctx:
            raise ContextMismatch("operands live in different variable contexts")
    return ctx


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def multiply(f: SuperFunction, g: SuperFunction) -> SuperFunction:
    _check_ctx(f, g)
    return f * g


def _coordinate_id(ctx: VarContext, var) -> int:
    if isinstance(var, str):
        if var in ctx.aux_names:
            raise GrassmannError(f"cannot differentiate with respect to the odd constant {var}")
        return ctx.coordinate_index(var)
    if not 0 <= var < 2 * ctx.n:
        raise GrassmannError(f"coordinate index {var} out of range")
    return var


def derivative(f: SuperFunction, var) -> SuperFunction:
    """Partial derivative; odd coordinates use the LEFT derivative.

    ``var`` is a coordinate index ``A`` (0..n-1 for x's, n..2n-1 for th's) or
    a coordinate name.
    """
    ctx = f.ctx
    A = _coordinate_id(ctx, var)
    if A < ctx.n:
        return SuperFunction(ctx, {m: c.diff(A) for m, c in f.terms.items()})
    return f.left_odd_derivative(A - ctx.n)


def _compose_poly(p, images: Sequence[SuperFunction], target: VarContext, cache: dict) -> SuperFunction:
    out = target.zero
    for monom, c in p.terms():
        term = target.const(_fraction(c))
        for i, e in enumerate(monom):
            if e:
                key = (i, e)
                if key not in cache:
                    cache[key] = images[i] ** e
                term = term * cache[key]
        out = out + term
    return out


def substitute(f: SuperFunction, images: Sequence[SuperFunction]) -> SuperFunction:
    """Simultaneous substitution ``z^A -> images[A]`` (a graded algebra map).

    ``images`` holds ``2n`` superfunctions of one target context; the
    auxiliary odd constants are carried over to the target's constants, so the
    target must have the same ``m``.
    """
    ctx = f.ctx
    if len(images) != 2 * ctx.n:
        raise GrassmannError(f"expected {2 * ctx.n} images, got {len(images)}")
    target = images[0].ctx
    _check_ctx(*images)
    if target.m != ctx.m:
        raise ContextMismatch("source and target must carry the same auxiliary constants")
    for A, img in enumerate(images):
        want = ctx.coordinate_parity(A)
        if img and img.parity() != want:
            raise ParityError(f"image of {ctx.coordinate_name(A)} must be {'odd' if want else 'even'}")
    cache: dict = {}
    coeff_cache: dict = {}
    out = target.zero
    for mask, c in f.terms.items():
        if c not in coeff_cache:
            num = _compose_poly(c.num, images, target, cache)
            if c.is_polynomial():
                coeff_cache[c] = num
            else:
                den = _compose_poly(c.den, images, target, cache)
                if not den.body():
                    raise NotInvertible("denominator vanishes after composition")
                coeff_cache[c] = num * invert_even(den)
        term = coeff_cache[c]
        for k in range(ctx.n + ctx.m):
            if mask >> k & 1:
                term = term * (images[ctx.n + k] if k < ctx.n else target.pi(k - ctx.n))
        out = out + term
    return out


def invert_even(f):
    """Inverse of an even element with invertible body, by the terminating Neumann series."""
    if not f.is_even():
        raise ParityError("only even elements can be inverted")
    return invert_unit(f)


def invert_unit(f):
    """Two-sided inverse of any element with invertible body (parity may be mixed)."""
    body = f.body()
    if not body:
        raise NotInvertible("element has zero body")
    binv = 1 / body if isinstance(body, Fraction) else body.inverse()
    t = -(f.soul().scale(binv))
    one = f._new({0: f._scalar(1)})
    out = one
    power = one
    while True:
        power = power * t
        if not power:
            break
        out = out + power
    return out.scale(binv)


def _binom_half(k: int) -> Fraction:
    out = Fraction(1)
    for j in range(k):
        out *= (Fraction(1, 2) - j) / (j + 1)
    return out


def sqrt_even(f):
    """Square root of an even element whose body is an exact square.

    The body root is the positive one for rationals and the one with positive
    leading coefficients for rational functions; the soul is handled by the
    binomial series, which terminates by nilpotency.
    """
    if not f.is_even():
        raise ParityError("only even elements have square roots here")
    body = f.body()
    if not body:
        raise NotInvertible("element has zero body")
    if isinstance(body, Fraction):
        root = _rational_sqrt(body)
        binv = 1 / body
    else:
        root = body.sqrt()
        binv = body.inverse()
    t = f.soul().scale(binv)
    one = f._new({0: f._scalar(1)})
    out = one
    power = one
    k = 0
    while True:
        k += 1
        power = power * t
        if not power:
            break
        out = out + power.scale(f._scalar(_binom_half(k)))
    return out.scale(root)


def evaluate(f: SuperFunction, point: Sequence) -> GrassmannNumber:
    """Evaluate every coefficient at a rational point of the even coordinates."""
    if len(point) != f.ctx.n:
        raise GrassmannError(f"point needs {f.ctx.n} coordinates")
    pt = [Fraction(v) for v in point]
    return GrassmannNumber(f.ctx, {m: c.evaluate(pt) for m, c in f.terms.items()})


def berezin_integral(f: SuperFunction) -> SuperFunction:
    """Coefficient of ``th1*...*thn``; auxiliary constants pass through.

    The result is returned as a superfunction without th-dependence.  The
    top monomial is split off to the right, ``f = a + ... + c*th1..thn``.
    """
    ctx = f.ctx
    top = ctx.theta_bits
    out = {}
    for m, c in f.terms.items():
        if m & top == top:
            aux = m ^ top
            # stored word is th_top * aux; moving aux to the left costs sign(aux . th_top)
            sign = _reorder_sign(aux, top)
            out[aux] = -c if sign < 0 else c
    return SuperFunction(ctx, out)


# ---------------------------------------------------------------------------
# super linear algebra
# ---------------------------------------------------------------------------

def determinant(rows: Sequence[Sequence]):
    """Determinant of a square matrix of mutually commuting (even) entries."""
    size = len(rows)
    if size == 0:
        raise ValueError("empty matrix")
    memo: dict = {}

    def minor(r: int, cols: tuple):
        if r == size:
            return None
        key = (r, cols)
        if key in memo:
            return memo[key]
        total = None
        for pos, c in enumerate(cols):
            entry = rows[r][c]
            if not entry:
                continue
            rest = minor(r + 1, cols[:pos] + cols[pos + 1:])
            term = entry if rest is None else entry * rest
            if pos % 2:
                term = -term
            total = term if total is None else total + term
        if total is None:
            total = rows[0][0] * 0
        memo[key] = total
        return total

    return minor(0, tuple(range(size)))


def _even_inverse(rows):
    size = len(rows)
    det = determinant(rows)
    dinv = invert_even(det)
    if size == 1:
        return [[dinv]]
    out = [[None] * size for _ in range(size)]
    for i in range(size):
        for j in range(size):
            sub = [[rows[r][c] for c in range(size) if c != i] for r in range(size) if r != j]
            cof = determinant(sub)
            out[i][j] = cof * dinv if (i + j) % 2 == 0 else -(cof * dinv)
    return out


def _matmul(X, Y):
    return [[_dot([X[i][k] for k in range(len(Y))], [Y[k][j] for k in range(len(Y))])
             for j in range(len(Y[0]))] for i in range(len(X))]


def _dot(xs, ys):
    total = None
    for a, b in zip(xs, ys):
        t = a * b
        total = t if total is None else total + t
    return total


class SuperMatrix:
    """Even supermatrix ``[[A, B], [C, D]]`` with parity-checked blocks.

    ``A`` and ``D`` hold even entries, ``B`` and ``C`` odd ones.  Entries are
    superfunctions or Grassmann numbers of one context.
    """

    def __init__(self, A, B, C, D):
        p, q = len(A), len(D)
        if p == 0 or q == 0:
            raise ValueError("both diagonal blocks must be nonempty")
        shapes = [(A, p, p), (B, p, q), (C, q, p), (D, q, q)]
        for blk, r, c in shapes:
            if len(blk) != r or any(len(row) != c for row in blk):
                raise ValueError("inconsistent block dimensions")
        for blk, want in ((A, 0), (B, 1), (C, 1), (D, 0)):
            for row in blk:
                for e in row:
                    if e and e.parity() != want:
                        raise ParityError("supermatrix entry has the wrong parity for its block")
        self.A, self.B, self.C, self.D = A, B, C, D

    @classmethod
    def from_rows(cls, rows, p: int) -> "SuperMatrix":
        """Split a full ``(p+q) x (p+q)`` matrix after row/column ``p``."""
        A = [r[:p] for r in rows[:p]]
        B = [r[p:] for r in rows[:p]]
        C = [r[:p] for r in rows[p:]]
        D = [r[p:] for r in rows[p:]]
        return cls(A, B, C, D)

    def rows(self):
        return [a + b for a, b in zip(self.A, self.B)] + [c + d for c, d in zip(self.C, self.D)]

    def __matmul__(self, other: "SuperMatrix") -> "SuperMatrix":
        return SuperMatrix.from_rows(_matmul(self.rows(), other.rows()), len(self.A))


def berezinian(J: SuperMatrix):
    """``Ber = det(A - B D^-1 C) / det D``."""
    D = J.D
    ddet = determinant(D)
    if not ddet.body():
        raise NotInvertible("odd-odd block is not invertible")
    Dinv = _even_inverse(D)
    BDC = _matmul(_matmul(J.B, Dinv), J.C)
    S = [[J.A[i][j] - BDC[i][j] for j in range(len(J.A))] for i in range(len(J.A))]
    sdet = determinant(S)
    if not sdet.body():
        raise NotInvertible("Schur complement is not invertible")
    return sdet * invert_even(ddet)


def solve_linear(rows: Sequence[Sequence], ncols: int):
    """Row-reduce ``rows`` (left row operations) over a Grassmann ring.

    Pivots are chosen among entries with an invertible body.  Returns
    ``(reduced_rows, pivot_columns)`` with each pivot normalised to 1 and
    eliminated from every other row.  Valid for noncommuting entries because
    only left multiplications are used.
    """
    M = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(M)) if M[i][c].body()), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = invert_unit(M[r][c])
        M[r] = [inv * e for e in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c]:
                lam = M[i][c]
                M[i] = [a - lam * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    return M, pivots


def matrix_inverse(rows: Sequence[Sequence]):
    """Two-sided inverse of a square matrix over a Grassmann ring."""
    size = len(rows)
    zero = rows[0][0] * 0
    one = zero + 1
    aug = [list(r) + [one if i == j else zero for j in range(size)] for i, r in enumerate(rows)]
    M, pivots = solve_linear(aug, size)
    if pivots != list(range(size)):
        raise NotInvertible("matrix body is singular")
    return [row[size:] for row in M]


# ---------------------------------------------------------------------------
# random generation
# ---------------------------------------------------------------------------

def _masks_of_parity(ctx: VarContext, parity: int, max_odd_degree: int, use_aux: bool = True):
    width = ctx.n + (ctx.m if use_aux else 0)
    return [m for m in range(1 << width)
            if m.bit_count() % 2 == parity and m.bit_count() <= max_odd_degree]


def random_polynomial(rng: random.Random, ctx: VarContext, max_degree: int, bound: int,
                      density: float = 0.5) -> CoeffFunction:
    R = ctx.ring
    terms = {}
    for monom in _exponents(ctx.n, max_degree):
        if rng.random() < density:
            c = rng.randint(-bound, bound)
            if c:
                terms[monom] = QQ(c)
    return CoeffFunction(R.from_dict(terms) if terms else R.zero, R.one, _reduced=True)


@lru_cache(maxsize=None)
def _exponents(n: int, max_degree: int):
    out = [()]
    for _ in range(n):
        out = [e + (k,) for e in out for k in range(max_degree + 1)]
    return [e for e in out if sum(e) <= max_degree]


def random_superfunction(seed, ctx: VarContext, parity: int, max_even_degree: int,
                         max_odd_degree: int, coeff_bound: int, density: float = 0.5,
                         use_aux: bool = True) -> SuperFunction:
    """Deterministic random homogeneous superfunction with polynomial coefficients.

    ``seed`` may be an int or a :class:`random.Random` instance.
    """
    if min(max_even_degree, max_odd_degree, coeff_bound) < 0:
        raise ValueError("bounds must be nonnegative")
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    terms = {}
    for mask in _masks_of_parity(ctx, parity, max_odd_degree, use_aux):
        c = random_polynomial(rng, ctx, max_even_degree, coeff_bound, density)
        if c:
            terms[mask] = c
    return SuperFunction(ctx, terms)
