"""Differential forms and polyvectors on the even base, and their images as
superfunctions and semidensities.

A form ``sum_I w_I dx^I`` is stored as a map from ascending 0-based index
tuples to coefficients.  Coefficients are superfunctions without ``th``
dependence; they may carry auxiliary odd constants, in which case they are
written to the left of the ``dx``'s and signs follow total parity.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Mapping

from .grassmann import ContextMismatch, GrassmannError, SuperFunction, VarContext, derivative
from .symplectic import Semidensity, buttin

__all__ = [
    "DifferentialForm",
    "Polyvector",
    "exterior_d",
    "tau",
    "tau_inverse",
    "tau_sharp",
    "tau_sharp_inverse",
    "interior",
    "schouten",
    "lie_bracket",
    "lie_derivative",
    "split_monomial",
]


def _position_sign(i: int, idx: tuple) -> tuple[int, tuple]:
    pos = idx.index(i)
    return (-1 if pos % 2 else 1), idx[:pos] + idx[pos + 1:]


def _merge_sign(I: tuple, J: tuple) -> int:
    """Sign of sorting the concatenation ``I + J`` (both ascending, disjoint)."""
    swaps = sum(1 for a in I for b in J if a > b)
    return -1 if swaps % 2 else 1


def split_monomial(ctx: VarContext, mask: int, coeff) -> tuple[tuple, SuperFunction]:
    """Rewrite ``coeff * th_K * p_P`` as ``(K, c)`` with the ``p``'s moved left of ``th_K``."""
    k_bits = mask & ctx.theta_bits
    p_bits = mask & ctx.aux_bits
    K = tuple(i for i in range(ctx.n) if k_bits >> i & 1)
    sign = -1 if (len(K) * p_bits.bit_count()) % 2 else 1
    c = SuperFunction(ctx, {p_bits: coeff if sign > 0 else -coeff})
    return K, c


class _Table:
    """Shared storage for forms and polyvectors."""

    kind = "table"

    def __init__(self, ctx: VarContext, terms: Mapping[tuple, SuperFunction] | None = None):
        self.ctx = ctx
        clean = {}
        for idx, c in (terms or {}).items():
            idx = tuple(idx)
            if list(idx) != sorted(set(idx)) or any(not 0 <= i < ctx.n for i in idx):
                raise GrassmannError(f"indices must be strictly ascending in 0..{ctx.n - 1}: {idx}")
            if not isinstance(c, SuperFunction):
                c = ctx.const(c)
            if c.ctx != ctx:
                raise ContextMismatch("coefficient lives in another context")
            if any(m & ctx.theta_bits for m in c.terms):
                raise GrassmannError("coefficients must not depend on odd coordinates")
            if c:
                clean[idx] = clean[idx] + c if idx in clean else c
        self.terms = {k: v for k, v in clean.items() if v}

    def _new(self, terms):
        return type(self)(self.ctx, terms)

    def _check(self, other):
        if type(other) is not type(self) or other.ctx != self.ctx:
            raise ContextMismatch(f"cannot combine {self.kind} with {other!r}")

    def __eq__(self, other):
        return type(other) is type(self) and other.ctx == self.ctx and other.terms == self.terms

    def __hash__(self):
        return hash((type(self).__name__, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out[k] + v if k in out else v
        return self._new(out)

    def __neg__(self):
        return self._new({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rmul__(self, c):
        """Left multiplication by a ``th``-free superfunction or a rational."""
        if not isinstance(c, SuperFunction):
            c = self.ctx.const(c)
        return self._new({k: c * v for k, v in self.terms.items()})

    def degrees(self) -> set[int]:
        return {len(k) for k in self.terms}

    def homogeneous(self, k: int):
        return self._new({i: v for i, v in self.terms.items() if len(i) == k})

    def coefficient(self, idx) -> SuperFunction:
        return self.terms.get(tuple(idx), self.ctx.zero)

    def _symbol(self, idx) -> str:
        raise NotImplementedError

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for idx in sorted(self.terms, key=lambda t: (len(t), t)):
            c = self.terms[idx]
            sym = self._symbol(idx)
            if not sym:
                parts.append(f"({c})")
            elif c == self.ctx.one:
                parts.append(sym)
            else:
                parts.append(f"({c})*{sym}")
        return " + ".join(parts)

    def __repr__(self):
        return f"{type(self).__name__}({self})"


class DifferentialForm(_Table):
    kind = "form"

    def _symbol(self, idx):
        return "^".join(f"d{self.ctx.even_names[i]}" for i in idx)

    @classmethod
    def basis(cls, ctx: VarContext, *idx: int) -> "DifferentialForm":
        """``dx^{i1}^...^dx^{ik}`` for distinct 0-based indices in any order."""
        if len(set(idx)) != len(idx):
            return cls(ctx)
        srt = tuple(sorted(idx))
        perm = [srt.index(i) for i in idx]
        inv = sum(1 for a, b in combinations(perm, 2) if a > b)
        return cls(ctx, {srt: ctx.const(-1 if inv % 2 else 1)})

    def wedge(self, other: "DifferentialForm") -> "DifferentialForm":
        self._check(other)
        out = {}
        for I, a in self.terms.items():
            for J, b in other.terms.items():
                if set(I) & set(J):
                    continue
                for pb, bpart in b.homogeneous_parts():
                    sign = _merge_sign(I, J) * (-1 if (len(I) * pb) % 2 else 1)
                    key = tuple(sorted(I + J))
                    t = (a * bpart).scale(sign)
                    out[key] = out[key] + t if key in out else t
        return DifferentialForm(self.ctx, out)


class Polyvector(_Table):
    kind = "polyvector"

    def _symbol(self, idx):
        return "^".join(f"d/d{self.ctx.even_names[i]}" for i in idx)

    @classmethod
    def basis(cls, ctx: VarContext, *idx: int) -> "Polyvector":
        f = DifferentialForm.basis(ctx, *idx)
        return cls(ctx, f.terms)

    @classmethod
    def vector_field(cls, components) -> "Polyvector":
        ctx = components[0].ctx
        return cls(ctx, {(i,): c for i, c in enumerate(components)})


def exterior_d(w: DifferentialForm) -> DifferentialForm:
    """``d(c dx^I) = sum_j (-1)^p(c) dc/dx^j dx^j ^ dx^I``."""
    ctx = w.ctx
    out = {}
    for I, c in w.terms.items():
        for p, part in c.homogeneous_parts():
            for j in range(ctx.n):
                if j in I:
                    continue
                dc = derivative(part, j)
                if not dc:
                    continue
                key = tuple(sorted(I + (j,)))
                sign = _merge_sign((j,), I) * (-1 if p else 1)
                t = dc.scale(sign)
                out[key] = out[key] + t if key in out else t
    return DifferentialForm(ctx, out)


def _theta_product(ctx: VarContext, idx) -> SuperFunction:
    return ctx.monomial(*idx)


def tau(T: Polyvector) -> SuperFunction:
    """``T^I del_I  ->  T^I th_I``."""
    ctx = T.ctx
    out = ctx.zero
    for I, c in T.terms.items():
        out = out + c * _theta_product(ctx, I)
    return out


def tau_inverse(f: SuperFunction) -> Polyvector:
    ctx = f.ctx
    out = {}
    for mask, c in f.terms.items():
        K, coeff = split_monomial(ctx, mask, c)
        out[K] = out[K] + coeff if K in out else coeff
    return Polyvector(ctx, out)


def _sharp_sign(I: tuple) -> int:
    # 1-based exponent sum(i+1) + k reduces to sum(i) for 0-based indices
    return -1 if sum(I) % 2 else 1


def _complement(ctx: VarContext, I: tuple) -> tuple:
    return tuple(i for i in range(ctx.n) if i not in I)


def tau_sharp(w: DifferentialForm, chart: str = "z") -> Semidensity:
    """Form to semidensity: ``dx^I  ->  (-1)^(sum I + |I|) th_(complement of I) |dz|^(1/2)``.

    The sign uses 1-based indices.  The complement is taken in ascending order.
    """
    ctx = w.ctx
    out = ctx.zero
    for I, c in w.terms.items():
        out = out + c.scale(_sharp_sign(I)) * _theta_product(ctx, _complement(ctx, I))
    return Semidensity(out, Fraction(1, 2), chart)


def tau_sharp_inverse(s: Semidensity) -> DifferentialForm:
    if s.weight != Fraction(1, 2):
        raise GrassmannError("expected a semidensity (weight 1/2)")
    ctx = s.ctx
    out = {}
    for mask, c in s.coeff.terms.items():
        K, coeff = split_monomial(ctx, mask, c)
        I = _complement(ctx, K)
        coeff = coeff.scale(_sharp_sign(I))
        out[I] = out[I] + coeff if I in out else coeff
    return DifferentialForm(ctx, out)


def _contract(J: tuple, I: tuple) -> tuple[int, tuple] | None:
    """``del_J`` into ``dx^I`` as ``i_{j1}(i_{j2}(...i_{jk}(dx^I)))``."""
    sign = 1
    idx = I
    for j in reversed(J):
        if j not in idx:
            return None
        s, idx = _position_sign(j, idx)
        sign *= s
    return sign, idx


def interior(T: Polyvector, w: DifferentialForm) -> DifferentialForm:
    """Contraction ``T -| w``; normalised so that ``tau#(T -| w) = tau(T) tau#(w)``.

    ``del_J`` acts as the composite of single-index contractions with the
    first index applied last, and a coefficient of ``w`` is moved past the
    ``|J|`` odd slots of ``T`` with the corresponding Koszul sign.
    """
    if T.ctx != w.ctx:
        raise ContextMismatch("polyvector and form live in different contexts")
    ctx = w.ctx
    out = {}
    for J, t in T.terms.items():
        for I, c in w.terms.items():
            hit = _contract(J, I)
            if hit is None:
                continue
            sign, rest = hit
            for p, part in c.homogeneous_parts():
                s = sign * (-1 if (len(J) * p) % 2 else 1)
                v = (t * part).scale(s)
                out[rest] = out[rest] + v if rest in out else v
    return DifferentialForm(ctx, out)


def schouten(T1: Polyvector, T2: Polyvector) -> Polyvector:
    """Bracket of polyvectors transported from the odd bracket through ``tau``.

    On vector fields this is minus the Lie bracket.
    """
    return tau_inverse(buttin(tau(T1), tau(T2)))


def lie_bracket(X: Polyvector, Y: Polyvector) -> Polyvector:
    """Commutator of two vector fields with even coefficients."""
    ctx = X.ctx
    if X.degrees() - {1} or Y.degrees() - {1}:
        raise GrassmannError("lie_bracket takes vector fields")
    xs = [X.coefficient((i,)) for i in range(ctx.n)]
    ys = [Y.coefficient((i,)) for i in range(ctx.n)]
    out = {}
    for i in range(ctx.n):
        v = ctx.zero
        for j in range(ctx.n):
            v = v + xs[j] * derivative(ys[i], j) - ys[j] * derivative(xs[i], j)
        out[(i,)] = v
    return Polyvector(ctx, out)


def lie_derivative(X: Polyvector, w: DifferentialForm) -> DifferentialForm:
    """Cartan formula ``d(X -| w) + X -| dw`` for an even vector field ``X``."""
    return exterior_d(interior(X, w)) + interior(X, exterior_d(w))
