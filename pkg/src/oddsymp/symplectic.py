"""Buttin bracket, BV Laplacians and semidensities in Darboux coordinates.

Coordinates are indexed ``A = 0..2n-1`` with ``x^i = A < n`` and
``th_i = n + i``.  The canonical bracket is ``{x^i, th_j} = delta_ij``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .grassmann import (
    ContextMismatch,
    GrassmannError,
    NotASquare,
    NotInvertible,
    ParityError,
    SuperFunction,
    SuperMatrix,
    VarContext,
    berezin_integral,
    berezinian,
    derivative,
    determinant,
    invert_even,
    invert_unit,
    sqrt_even,
    substitute,
)

__all__ = [
    "buttin",
    "ham_field",
    "apply_field",
    "delta0",
    "delta_v",
    "delta_v_divergence",
    "divergence",
    "VolumeForm",
    "Semidensity",
    "delta_sharp",
    "delta_Q",
    "delta_Q_coordinate",
    "CoordinateMapPair",
    "transform_density",
    "point_transformation",
    "verify_darboux",
    "Diagnostics",
    "diagnostics",
    "jacobi_defect",
    "bracket_sign",
]


def bracket_sign(pf: int, pg: int) -> int:
    """Sign in graded antisymmetry ``{f,g} = -(-1)^((f+1)(g+1)) {g,f}``."""
    return -1 if ((pf + 1) * (pg + 1)) % 2 else 1


def _homogeneous(f: SuperFunction, what: str) -> int:
    p = f.parity()
    if p is None:
        raise ParityError(f"{what} must be parity-homogeneous")
    return p


def buttin(f: SuperFunction, g: SuperFunction) -> SuperFunction:
    """Odd Poisson bracket in Darboux coordinates.

    ``{f,g} = sum_i df/dx^i dg/dth_i + (-1)^f df/dth_i dg/dx^i``; mixed-parity
    ``f`` is split into homogeneous parts.
    """
    ctx = f.ctx
    if g.ctx != ctx:
        raise ContextMismatch("bracket operands live in different contexts")
    n = ctx.n
    out = ctx.zero
    dg_x = [derivative(g, i) for i in range(n)]
    dg_th = [derivative(g, n + i) for i in range(n)]
    for p, part in f.homogeneous_parts():
        for i in range(n):
            if dg_th[i]:
                out = out + derivative(part, i) * dg_th[i]
            if dg_x[i]:
                t = derivative(part, n + i) * dg_x[i]
                out = out - t if p else out + t
    return out


def ham_field(f: SuperFunction) -> list[SuperFunction]:
    """Components ``{f, z^A}`` of the Hamiltonian vector field of ``f``."""
    _homogeneous(f, "Hamiltonian")
    return [buttin(f, z) for z in f.ctx.coordinates()]


def apply_field(components: Sequence[SuperFunction], g: SuperFunction) -> SuperFunction:
    """Apply ``X = X^A d/dz^A`` (left derivatives) to ``g``."""
    out = g.ctx.zero
    for A, comp in enumerate(components):
        if comp:
            out = out + comp * derivative(g, A)
    return out


def delta0(f: SuperFunction) -> SuperFunction:
    """Flat BV Laplacian ``sum_i d^2 f / dx^i dth_i``."""
    n = f.ctx.n
    out = f.ctx.zero
    for i in range(n):
        dth = derivative(f, n + i)
        if dth:
            out = out + derivative(dth, i)
    return out


@dataclass(frozen=True)
class VolumeForm:
    """``dv = rho(z) |dz|`` with ``rho`` even and body-invertible."""

    rho: SuperFunction
    chart: str = "z"

    def __post_init__(self):
        if not self.rho.is_even():
            raise ParityError("volume density must be even")
        if not self.rho.body():
            raise NotInvertible("volume density has zero body")

    @property
    def ctx(self) -> VarContext:
        return self.rho.ctx

    def sqrt(self) -> "Semidensity":
        """The semidensity ``sqrt(dv)``; needs a perfect-square body."""
        return Semidensity(sqrt_even(self.rho), Fraction(1, 2), self.chart)

    @classmethod
    def flat(cls, ctx: VarContext, chart: str = "z") -> "VolumeForm":
        return cls(ctx.one, chart)


def delta_v(f: SuperFunction, dv: VolumeForm) -> SuperFunction:
    """``Delta_0 f + 1/2 rho^-1 {rho, f}``, the log-free form of the twisted Laplacian."""
    if f.ctx != dv.ctx:
        raise ContextMismatch("function and volume form live in different contexts")
    br = buttin(dv.rho, f)
    if not br:
        return delta0(f)
    return delta0(f) + (invert_even(dv.rho) * br).scale(Fraction(1, 2))


def divergence(components: Sequence[SuperFunction], dv: VolumeForm) -> SuperFunction:
    """Divergence of a homogeneous vector field w.r.t. ``dv`` (left components).

    ``div X = sum_A (-1)^(A (X+1)) dX^A/dz^A + X^A d(log rho)/dz^A``.
    """
    ctx = dv.ctx
    parities = {c.parity() for c in components if c}
    px = None
    for A, c in enumerate(components):
        if c:
            px = (c.parity() + ctx.coordinate_parity(A)) % 2
            break
    if px is None:
        return ctx.zero
    if None in parities:
        raise ParityError("vector field must be homogeneous")
    rinv = invert_even(dv.rho)
    out = ctx.zero
    for A, c in enumerate(components):
        if not c:
            continue
        pa = ctx.coordinate_parity(A)
        t = derivative(c, A)
        out = out - t if (pa * (px + 1)) % 2 else out + t
        dr = derivative(dv.rho, A)
        if dr:
            out = out + c * rinv * dr
    return out


def delta_v_divergence(f: SuperFunction, dv: VolumeForm) -> SuperFunction:
    """Twisted Laplacian as half the divergence of the Hamiltonian field."""
    out = f.ctx.zero
    for p, part in f.homogeneous_parts():
        d = divergence(ham_field(part), dv).scale(Fraction(1, 2))
        out = out - d if p else out + d
    return out


# ---------------------------------------------------------------------------
# semidensities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Semidensity:
    """Density ``coeff(z) |dz|^weight`` in the Darboux chart ``chart``.

    ``weight`` is 1/2 for semidensities, 1 for volume forms, 0 for functions.
    """

    coeff: SuperFunction
    weight: Fraction = Fraction(1, 2)
    chart: str = "z"

    def __post_init__(self):
        object.__setattr__(self, "weight", Fraction(self.weight))

    @property
    def ctx(self) -> VarContext:
        return self.coeff.ctx

    def _check(self, other: "Semidensity"):
        if other.chart != self.chart or other.ctx != self.ctx:
            raise ContextMismatch("densities are expressed in different charts")

    def __add__(self, other: "Semidensity") -> "Semidensity":
        self._check(other)
        if other.weight != self.weight:
            raise GrassmannError("cannot add densities of different weights")
        return Semidensity(self.coeff + other.coeff, self.weight, self.chart)

    def __sub__(self, other: "Semidensity") -> "Semidensity":
        return self + (-other)

    def __neg__(self) -> "Semidensity":
        return Semidensity(-self.coeff, self.weight, self.chart)

    def __mul__(self, other):
        if isinstance(other, Semidensity):
            self._check(other)
            return Semidensity(self.coeff * other.coeff, self.weight + other.weight, self.chart)
        return Semidensity(self.coeff * other, self.weight, self.chart)

    def __rmul__(self, other):
        return Semidensity(other * self.coeff, self.weight, self.chart)

    def __str__(self):
        w = self.weight
        suffix = "" if w == 0 else (f"|d{self.chart}|" if w == 1 else f"|d{self.chart}|^{w}")
        return f"({self.coeff}){suffix}" if suffix else str(self.coeff)


def _require_half(s: Semidensity):
    if s.weight != Fraction(1, 2):
        raise GrassmannError(f"expected a semidensity (weight 1/2), got weight {s.weight}")


def delta_sharp(s: Semidensity) -> Semidensity:
    """``Delta# s = (Delta_0 s(z)) |dz|^(1/2)``."""
    _require_half(s)
    return Semidensity(delta0(s.coeff), s.weight, s.chart)


def delta_Q(s: Semidensity, Q: SuperFunction) -> Semidensity:
    """Infinitesimal canonical action ``Q Delta# s + Delta#(Q s)``."""
    _require_half(s)
    if not Q.is_odd():
        raise ParityError("the generating Hamiltonian must be odd")
    return Semidensity(Q * delta0(s.coeff) + delta0(Q * s.coeff), s.weight, s.chart)


def delta_Q_coordinate(s: Semidensity, Q: SuperFunction) -> Semidensity:
    """The same action in coordinate form, ``Delta_0 Q s - {Q, s}``."""
    _require_half(s)
    if not Q.is_odd():
        raise ParityError("the generating Hamiltonian must be odd")
    return Semidensity(delta0(Q) * s.coeff - buttin(Q, s.coeff), s.weight, s.chart)


# ---------------------------------------------------------------------------
# changes of Darboux coordinates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoordinateMapPair:
    """A change of coordinates given in both directions.

    ``forward[B]`` is the new coordinate ``z~^B`` as a function of the old
    coordinates (context ``source``); ``backward[A]`` is the old coordinate
    ``z^A`` as a function of the new ones (context ``target``).  Round trips are
    checked on construction.
    """

    forward: tuple[SuperFunction, ...]
    backward: tuple[SuperFunction, ...]
    source_chart: str = "z"
    target_chart: str = "w"

    def __post_init__(self):
        object.__setattr__(self, "forward", tuple(self.forward))
        object.__setattr__(self, "backward", tuple(self.backward))
        src, tgt = self.source, self.target
        if src.n != tgt.n or src.m != tgt.m:
            raise ContextMismatch("charts must have the same dimension")
        if len(self.forward) != 2 * src.n or len(self.backward) != 2 * src.n:
            raise GrassmannError("maps need one image per coordinate")
        for k in range(2 * src.n):
            if substitute(self.forward[k], self.backward) != tgt.coordinate(k):
                raise GrassmannError(f"backward map does not invert forward map at {tgt.coordinate_name(k)}")
            if substitute(self.backward[k], self.forward) != src.coordinate(k):
                raise GrassmannError(f"forward map does not invert backward map at {src.coordinate_name(k)}")

    @property
    def source(self) -> VarContext:
        return self.forward[0].ctx

    @property
    def target(self) -> VarContext:
        return self.backward[0].ctx

    @classmethod
    def identity(cls, ctx: VarContext, chart: str = "z") -> "CoordinateMapPair":
        coords = tuple(ctx.coordinates())
        return cls(coords, coords, chart, chart)

    def inverse(self) -> "CoordinateMapPair":
        return CoordinateMapPair(self.backward, self.forward, self.target_chart, self.source_chart)

    def then(self, other: "CoordinateMapPair") -> "CoordinateMapPair":
        """Composite map: first ``self``, then ``other``."""
        fwd = tuple(substitute(f, self.forward) for f in other.forward)
        bwd = tuple(substitute(b, other.backward) for b in self.backward)
        return CoordinateMapPair(fwd, bwd, self.source_chart, other.target_chart)

    def jacobian(self) -> SuperMatrix:
        """Left-derivative Jacobian ``d z^A / d z~^C`` with rows ``C`` and columns ``A``."""
        n = self.target.n
        rows = [[derivative(self.backward[A], C) for A in range(2 * n)] for C in range(2 * n)]
        return SuperMatrix.from_rows(rows, n)

    def berezinian(self) -> SuperFunction:
        """``Ber(dz/dz~)`` as a function of the new coordinates."""
        return berezinian(self.jacobian())

    def is_point_transformation(self) -> bool:
        """True when ``x`` depends on ``x~`` only and ``th`` is linear in ``th~``."""
        n = self.target.n
        for i in range(n):
            x = self.backward[i]
            if any(m for m in x.terms):
                return False
            t = self.backward[n + i]
            if any(m.bit_count() != 1 or m >> n for m in t.terms):
                return False
        return True

    def even_jacobian_det(self) -> SuperFunction:
        n = self.target.n
        return determinant([[derivative(self.backward[A], C) for A in range(n)] for C in range(n)])

    def ber_power(self, weight: Fraction) -> SuperFunction:
        """``Ber^weight`` for integer and half-integer weights.

        Point transformations use ``Ber^(1/2) = det(dx/dx~)``; otherwise the
        square root must exist at the symbolic layer.
        """
        weight = Fraction(weight)
        if (2 * weight).denominator != 1:
            raise GrassmannError("only integer and half-integer weights are supported")
        twice = int(2 * weight)
        if twice == 0:
            return self.target.one
        if self.is_point_transformation():
            root = self.even_jacobian_det()
        else:
            ber = self.berezinian()
            root = sqrt_even(ber) if twice % 2 else None
            if root is None:
                return ber ** (twice // 2) if twice > 0 else invert_even(ber) ** (-twice // 2)
        return root ** twice if twice > 0 else invert_even(root) ** (-twice)


def point_transformation(forward_x: Sequence[SuperFunction], backward_x: Sequence[SuperFunction],
                         source_chart: str = "z", target_chart: str = "w") -> CoordinateMapPair:
    """Canonical lift of an invertible change of the even coordinates.

    ``forward_x`` gives ``x~(x)`` and ``backward_x`` gives ``x(x~)``; the odd
    coordinates transform as ``th~_j = sum_i dx^i/dx~^j th_i``.
    """
    src = forward_x[0].ctx
    tgt = backward_x[0].ctx
    n = src.n
    for f in list(forward_x) + list(backward_x):
        if any(f.terms.keys() - {0}):
            raise GrassmannError("even images must not involve odd generators")
    fwd_th = []
    for j in range(n):
        t = src.zero
        for i in range(n):
            t = t + substitute(derivative(backward_x[i], j), list(forward_x) + [src.zero] * n) * src.theta(i)
        fwd_th.append(t)
    bwd_th = []
    for i in range(n):
        t = tgt.zero
        for j in range(n):
            t = t + substitute(derivative(forward_x[j], i), list(backward_x) + [tgt.zero] * n) * tgt.theta(j)
        bwd_th.append(t)
    return CoordinateMapPair(list(forward_x) + fwd_th, list(backward_x) + bwd_th, source_chart, target_chart)


def transform_density(s: Semidensity, chart_map: CoordinateMapPair) -> Semidensity:
    """Express ``s`` in the new chart: ``s(z(z~)) Ber(dz/dz~)^weight``."""
    if s.ctx != chart_map.source:
        raise ContextMismatch("density is not in the source chart of the map")
    coeff = substitute(s.coeff, chart_map.backward) * chart_map.ber_power(s.weight)
    return Semidensity(coeff, s.weight, chart_map.target_chart)


def verify_darboux(chart_map: CoordinateMapPair) -> tuple[bool, list[tuple[str, str, str]]]:
    """Check the new coordinates have canonical brackets.

    Returns ``(ok, defects)`` where each defect is
    ``(name_A, name_B, printed bracket)`` for a pair whose bracket differs from
    the canonical table.
    """
    src, tgt = chart_map.source, chart_map.target
    n = src.n
    defects = []
    zs = chart_map.forward
    for A in range(2 * n):
        for B in range(2 * n):
            val = buttin(zs[A], zs[B])
            if A < n <= B and B - n == A:
                want = src.one
            elif B < n <= A and A - n == B:
                want = -src.one
            else:
                want = src.zero
            if val != want:
                defects.append((tgt.coordinate_name(A), tgt.coordinate_name(B), str(val)))
    return not defects, defects


# ---------------------------------------------------------------------------
# master-equation diagnostics
# ---------------------------------------------------------------------------

@dataclass
class Diagnostics:
    """Invariants of a semidensity ``s = sqrt(dv)``.

    ``nu`` is the odd constant with ``Delta# s = nu s`` (None when
    ``s^-1 Delta# s`` is not constant); ``c`` is the Berezin integral of a
    closed ``s`` (None when ``Delta# s != 0``).
    """

    nu: SuperFunction | None
    c: SuperFunction | None
    master_equation: bool
    delta_nilpotent: bool
    normal: bool
    delta_s: SuperFunction = field(repr=False, default=None)

    def as_json(self) -> dict:
        return {
            "nu": _json_value(self.nu) if self.nu is not None else "non-constant",
            "c": _json_value(self.c) if self.c is not None else None,
            "master_equation": self.master_equation,
            "delta_nilpotent": self.delta_nilpotent,
            "normal": self.normal,
        }


def _json_value(f: SuperFunction):
    if not f.terms:
        return 0
    if set(f.terms) == {0} and f.body().is_constant():
        q = f.body().constant_value()
        return int(q) if q.denominator == 1 else str(q)
    return str(f)


def diagnostics(s: Semidensity) -> Diagnostics:
    """Report ``nu``, ``c`` and the three master-equation conditions for ``s``."""
    _require_half(s)
    ds = delta0(s.coeff)
    if not s.coeff.body():
        raise NotInvertible("semidensity coefficient has zero body")
    t = invert_unit(s.coeff) * ds
    nu = t if t.is_constant() else None
    master = not ds
    c = berezin_integral(s.coeff) if master else None
    normal = master and not c
    return Diagnostics(nu, c, master, nu is not None, normal, ds)


def jacobi_defect(f: SuperFunction, g: SuperFunction, h: SuperFunction) -> SuperFunction:
    """Cyclic sum ``(-1)^((f+1)(h+1)) {f,{g,h}} + cycl.``, identically zero."""
    pf, pg, ph = (_homogeneous(a, "Jacobi argument") for a in (f, g, h))

    def s(pa, pc):
        return -1 if ((pa + 1) * (pc + 1)) % 2 else 1

    return (buttin(f, buttin(g, h)).scale(s(pf, ph))
            + buttin(g, buttin(h, f)).scale(s(pg, pf))
            + buttin(h, buttin(f, g)).scale(s(ph, pg)))
