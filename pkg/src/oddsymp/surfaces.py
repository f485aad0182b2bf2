"""Semidensities on surfaces of codimension (1|1) in an odd symplectic superspace.

Three representations of the surface are supported:

* :class:`AdjustedSurface` -- Darboux coordinates in which the surface is
  ``x^0 = th_0 = 0`` (the first coordinate pair of the context);
* :class:`GraphSurface` / :class:`EquationSurface` -- the surface is cut out by
  an even ``f`` and an odd ``phi``;
* :class:`ParamSurface` -- an explicit parametrization ``z(xi, eta)``, handled
  pointwise with Grassmann-number linear algebra.

Normalizations.  In adjusted coordinates with ``dv = rho |dz|``

    A_param = 2 d(sqrt rho)/d th_0 = 2 A_adjusted(sqrt dv) = 2 sqrt(rho) dual_A

on the surface, and these factors are what the cross-checks assert.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .grassmann import (
    ContextMismatch,
    GrassmannError,
    GrassmannNumber,
    NotASquare,
    NotInvertible,
    ParityError,
    SuperFunction,
    SuperMatrix,
    VarContext,
    berezinian,
    derivative,
    determinant,
    evaluate,
    invert_even,
    invert_unit,
    matrix_inverse,
    solve_linear,
    sqrt_even,
    substitute,
)
from .forms import DifferentialForm
from .symplectic import Semidensity, VolumeForm, buttin, delta0, delta_sharp, delta_v

__all__ = [
    "AdjustedSurface",
    "GraphSurface",
    "EquationSurface",
    "ParamSurface",
    "DegenerateSurface",
    "A_adjusted",
    "A_param",
    "dual_A",
    "dual_A_at",
    "P0_P1",
    "induced_delta_sharp",
    "restrict_to",
    "lift",
    "pullback_to_reduced",
    "correspondence_sign",
    "flat_parametrization",
    "graph_parametrization",
    "FRAME_TO_DUAL",
    "ADJUSTED_TO_DUAL",
]

# A_param / (sqrt(rho) * dual_A) and A_adjusted(sqrt dv) / (sqrt(rho) * dual_A) on a surface
FRAME_TO_DUAL = Fraction(2)
ADJUSTED_TO_DUAL = Fraction(1)


class DegenerateSurface(GrassmannError):
    """The induced two-form, or the bracket ``{f, phi}``, is singular."""


# ---------------------------------------------------------------------------
# adjusted surfaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdjustedSurface:
    """The surface ``x^0 = th_0 = 0`` of the ambient chart ``chart``.

    The surface inherits the Darboux chart of the remaining coordinates.
    """

    ctx: VarContext
    chart: str = "z"

    def __post_init__(self):
        if self.ctx.n < 2:
            raise GrassmannError("surfaces need an ambient dimension n >= 2")

    @property
    def reduced(self) -> VarContext:
        return self.ctx.reduced(0)

    @property
    def induced_chart(self) -> str:
        return self.chart + "_M"


def restrict_to(f: SuperFunction, M: AdjustedSurface) -> SuperFunction:
    """Set ``x^0 = th_0 = 0`` and rename the remaining coordinates."""
    if f.ctx != M.ctx:
        raise ContextMismatch("function is not in the adjusted chart of the surface")
    red = M.reduced
    n = M.ctx.n
    images = [red.zero] + [red.x(i) for i in range(n - 1)] + [red.zero] + [red.theta(i) for i in range(n - 1)]
    return substitute(f, images)


def lift(f: SuperFunction, ambient: VarContext) -> SuperFunction:
    """Embed a function of the surface coordinates as an ambient function independent of ``x^0, th_0``."""
    n = ambient.n
    if f.ctx.n != n - 1 or f.ctx.m != ambient.m:
        raise ContextMismatch("reduced context does not match the ambient one")
    images = [ambient.x(i + 1) for i in range(n - 1)] + [ambient.theta(i + 1) for i in range(n - 1)]
    return substitute(f, images)


def pullback_to_reduced(w: DifferentialForm, M: AdjustedSurface) -> DifferentialForm:
    """Pull a form on the ambient base back to ``x^0 = 0``: drop ``dx^0`` terms and shift indices."""
    if w.ctx != M.ctx:
        raise ContextMismatch("form is not in the adjusted chart of the surface")
    red = M.reduced
    return DifferentialForm(red, {tuple(i - 1 for i in I): restrict_to(c, M)
                                  for I, c in w.terms.items() if 0 not in I})


def correspondence_sign(w: DifferentialForm) -> DifferentialForm:
    """Multiply each ``c dx^I`` by ``(-1)^(|I| + p(c) + 1)``.

    With it ``A_adjusted(tau#(w)) = -tau#(pullback(correspondence_sign(w)))``.
    On odd-degree forms with even coefficients the sign change is trivial, so
    there the plain minus sign holds.
    """
    out = {}
    for I, c in w.terms.items():
        for p, part in c.homogeneous_parts():
            t = part if (len(I) + p) % 2 else -part
            out[I] = out[I] + t if I in out else t
    return DifferentialForm(w.ctx, out)


def _check_chart(s: Semidensity, M: AdjustedSurface):
    if s.ctx != M.ctx or s.chart != M.chart:
        raise ContextMismatch("semidensity is not expressed in the adjusted chart of the surface")
    if s.weight != Fraction(1, 2):
        raise GrassmannError("expected a semidensity (weight 1/2)")


def A_adjusted(s: Semidensity, M: AdjustedSurface) -> Semidensity:
    """``ds/dth_0`` restricted to ``x^0 = th_0 = 0``, as a semidensity on ``M``."""
    _check_chart(s, M)
    n = M.ctx.n
    return Semidensity(restrict_to(derivative(s.coeff, n), M), Fraction(1, 2), M.induced_chart)


def induced_delta_sharp(t: Semidensity) -> Semidensity:
    """``Delta#`` of the induced structure; the induced chart is Darboux."""
    return delta_sharp(t)


def P0_P1(s: Semidensity, M: AdjustedSurface) -> tuple[Semidensity, Semidensity]:
    """Weight-1 densities ``A(Delta# s)^2`` and ``A(s) A(Delta# s)`` on ``M``.

    ``P1`` keeps the factor order ``A(s)`` first.
    """
    a = A_adjusted(s, M)
    b = A_adjusted(delta_sharp(s), M)
    return b * b, a * b


# ---------------------------------------------------------------------------
# surfaces given by equations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GraphSurface:
    """``x^0 = g, th_0 = chi`` with ``g`` even and ``chi`` odd in the remaining coordinates."""

    ambient: VarContext
    g: SuperFunction
    chi: SuperFunction

    def __post_init__(self):
        red = self.ambient.reduced(0)
        if self.g.ctx != red or self.chi.ctx != red:
            raise ContextMismatch("graph data must live in the reduced context")
        if not self.g.is_even() and self.g:
            raise ParityError("g must be even")
        if not self.chi.is_odd() and self.chi:
            raise ParityError("chi must be odd")

    @property
    def reduced(self) -> VarContext:
        return self.ambient.reduced(0)

    def equations(self) -> tuple[SuperFunction, SuperFunction]:
        amb = self.ambient
        return amb.x(0) - lift(self.g, amb), amb.theta(0) - lift(self.chi, amb)

    def restrict(self, F: SuperFunction) -> SuperFunction:
        red = self.reduced
        n = self.ambient.n
        images = ([self.g] + [red.x(i) for i in range(n - 1)]
                  + [self.chi] + [red.theta(i) for i in range(n - 1)])
        return substitute(F, images)


@dataclass(frozen=True)
class EquationSurface:
    """``f = 0, phi = 0``; restriction uses the optional graph description."""

    f: SuperFunction
    phi: SuperFunction
    graph: GraphSurface | None = None

    def __post_init__(self):
        if not self.f.is_even():
            raise ParityError("f must be even")
        if not self.phi.is_odd():
            raise ParityError("phi must be odd")
        if self.graph is not None:
            for h in (self.f, self.phi):
                if self.graph.restrict(h):
                    raise GrassmannError("graph data does not lie on the surface f = phi = 0")
        br = buttin(self.f, self.phi)
        on = self.restrict(br)
        if not on.body():
            raise DegenerateSurface("{f, phi} has vanishing body on the surface")

    @property
    def ambient(self) -> VarContext:
        return self.f.ctx

    def equations(self):
        return self.f, self.phi

    def restrict(self, F: SuperFunction) -> SuperFunction:
        return F if self.graph is None else self.graph.restrict(F)


def _dual_parts(S, dv: VolumeForm):
    f, phi = S.equations()
    F = buttin(f, phi)
    if not F.is_even() and F:
        raise ParityError("{f, phi} must be even")
    if not F.body():
        raise DegenerateSurface("{f, phi} has zero body")
    Finv = invert_even(F)
    ff = buttin(f, f)
    half = Fraction(1, 2)
    E = (delta_v(f, dv)
         - (ff * Finv).scale(half) * delta_v(phi, dv)
         - buttin(f, F) * Finv
         - (ff * Finv * Finv).scale(half) * buttin(phi, F))
    return S.restrict(E), S.restrict(F)


def dual_A(S, dv: VolumeForm) -> SuperFunction:
    """Dual expression of the surface semidensity, restricted to the surface.

    Computes ``{f,phi}^(-1/2) (Delta f - {f,f}/(2{f,phi}) Delta phi
    - {f,{f,phi}}/{f,phi} - {f,f}/(2{f,phi}^2) {phi,{f,phi}})`` with
    ``Delta = Delta_dv``.  The square root must exist symbolically; use
    :func:`dual_A_at` otherwise.
    """
    E, F = _dual_parts(S, dv)
    try:
        root = sqrt_even(F)
    except (NotASquare, NotInvertible) as exc:
        raise NotASquare(f"sqrt of {{f, phi}} is not representable symbolically: {exc}") from exc
    return invert_even(root) * E


def dual_A_at(S, dv: VolumeForm, point) -> GrassmannNumber:
    """:func:`dual_A` evaluated at a rational point of the surface coordinates."""
    E, F = _dual_parts(S, dv)
    Fp = evaluate(F, point)
    return invert_even(sqrt_even(Fp)) * evaluate(E, point)


# ---------------------------------------------------------------------------
# parametrized surfaces and the frame formula
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParamSurface:
    """``z^A = z^A(xi, eta)``: ``2n`` images in a parameter context with ``n-1`` even and ``n-1`` odd parameters."""

    ambient: VarContext
    images: tuple

    def __post_init__(self):
        object.__setattr__(self, "images", tuple(self.images))
        amb = self.ambient
        if len(self.images) != 2 * amb.n:
            raise GrassmannError("need one image per ambient coordinate")
        params = self.params
        if params.n != amb.n - 1 or params.m != amb.m:
            raise ContextMismatch("parameter context must have n-1 even/odd parameters and the same constants")
        for A, z in enumerate(self.images):
            if z.ctx != params:
                raise ContextMismatch("images must share the parameter context")
            if z and z.parity() != amb.coordinate_parity(A):
                raise ParityError(f"image of {amb.coordinate_name(A)} has the wrong parity")

    @property
    def params(self) -> VarContext:
        return self.images[0].ctx

    def pull(self, F: SuperFunction) -> SuperFunction:
        return substitute(F, self.images)


def flat_parametrization(ctx: VarContext) -> ParamSurface:
    """``x^0 = th_0 = 0`` with the remaining coordinates as parameters."""
    P = VarContext.named(ctx.n - 1, ctx.m, even="xi", odd="eta")
    n = ctx.n
    return ParamSurface(ctx, [P.zero] + [P.x(i) for i in range(n - 1)] + [P.zero] + [P.theta(i) for i in range(n - 1)])


def graph_parametrization(G: GraphSurface) -> ParamSurface:
    """Parametrize a graph surface by the remaining coordinates."""
    amb = G.ambient
    P = VarContext.named(amb.n - 1, amb.m, even="xi", odd="eta")
    n = amb.n
    red = G.reduced
    ident = [P.x(i) for i in range(n - 1)] + [P.theta(i) for i in range(n - 1)]
    del red
    g = substitute(G.g, ident)
    chi = substitute(G.chi, ident)
    return ParamSurface(amb, [g] + ident[:n - 1] + [chi] + ident[n - 1:])


def _omega(X, Y, n: int, py: int):
    """Ambient odd form on component lists: ``sum X^x Y^th - (-1)^p(Y) X^th Y^x``."""
    out = None
    for i in range(n):
        t = X[i] * Y[n + i]
        u = X[n + i] * Y[i]
        t = t + u if py else t - u
        out = t if out is None else out + t
    return out


def _null_vectors(E, n: int, parity: int):
    """Solve ``Omega(e_alpha, V) = 0`` for ``V`` of the given parity.

    Returns ``(free_x, free_th, sol)`` where ``sol(c)`` is the solution with the
    free ``x`` slot or the free ``th`` slot set to one.
    """
    rows = []
    for e in E:
        row = [None] * (2 * n)
        for i in range(n):
            row[n + i] = e[i]
            row[i] = e[n + i] if parity else -e[n + i]
        rows.append(row)
    M, piv = solve_linear(rows, 2 * n)
    if len(piv) != 2 * n - 2:
        raise DegenerateSurface("induced two-form is degenerate at this point")
    free = [c for c in range(2 * n) if c not in piv]
    fx = [c for c in free if c < n]
    fth = [c for c in free if c >= n]
    if len(fx) != 1 or len(fth) != 1:
        raise DegenerateSurface("normal directions are not of type (1|1) at this point")
    zero = E[0][0] * 0

    def sol(col):
        V = [zero] * (2 * n)
        V[col] = zero + 1
        for r, pc in enumerate(piv):
            V[pc] = -M[r][col]
        return V

    return fx[0], fth[0], sol


def _scale_right(V, c):
    return [v * c for v in V]


def _body_value(g) -> Fraction:
    b = g.body()
    if isinstance(b, Fraction):
        return b
    if not b.is_constant():
        raise GrassmannError("orientation needs a numeric body; pass an evaluation point")
    return b.constant_value()


def _body_det(rows, n: int) -> Fraction:
    return determinant([[_body_value(r[i]) for i in range(n)] for r in rows])


def A_param(P: ParamSurface, dv: VolumeForm, point: Sequence | None):
    """Value at ``point`` of the surface semidensity built from an adapted normal frame.

    With ``point=None`` the computation runs symbolically in the parameter
    context, which needs exact square roots along the way.

    The odd normal ``Psi`` and even normal ``H`` are symplecto-orthogonal to the
    tangent frame with ``Omega(H, Psi) = 1``, ``Omega(Psi, Psi) = 0`` and unit
    volume on the frame; the result is
    ``Psi^A dlog rho/dz^A + (-1)^(B(a+b)+a) Psi^A Omega_AB d2z^B/dzeta^c dzeta^a Omega^ac``
    relative to ``|d xi d eta|^(1/2)``.
    """
    amb = P.ambient
    if dv.ctx != amb:
        raise ContextMismatch("volume form is not on the ambient space")
    n = amb.n
    Pc = P.params
    k = n - 1
    npar = 2 * k
    par_parity = [0] * k + [1] * k
    if point is None:
        def ev(F):
            return F
    else:
        point = [Fraction(v) for v in point]

        def ev(F):
            return evaluate(F, point)

    # tangent vectors e_alpha^A = d z^A / d zeta^alpha
    first = [[derivative(z, a) for z in P.images] for a in range(npar)]
    E = [[ev(c) for c in row] for row in first]
    for a in range(npar):
        for A in range(2 * n):
            c = E[a][A]
            if c and c.parity() != (par_parity[a] + amb.coordinate_parity(A)) % 2:
                raise ParityError("inhomogeneous tangent vector")

    # normals
    fx, fth, sol_odd = _null_vectors(E, n, 1)
    S_th, S_x = sol_odd(fth), sol_odd(fx)
    c0 = None
    K = None
    for i in range(n):
        t0 = S_th[i] * S_th[n + i]
        tk = S_th[i] * S_x[n + i] + S_x[i] * S_th[n + i]
        c0 = t0 if c0 is None else c0 + t0
        K = tk if K is None else K + tk
    if not K.body():
        raise DegenerateSurface("normal frame cannot be made isotropic")
    mu = -(invert_even(K) * c0)
    Psi0 = [a + b for a, b in zip(S_th, _scale_right(S_x, mu))]
    fx_e, fth_e, sol_even = _null_vectors(E, n, 0)
    H0 = sol_even(fx_e)
    w = _omega(H0, Psi0, n, 1)
    if not w.body():
        raise DegenerateSurface("normal pair is degenerate")

    # volume normalisation
    rho = ev(P.pull(dv.rho))
    even_rows = [E[a] for a in range(k)] + [H0]
    odd_rows = [E[a] for a in range(k, npar)] + [Psi0]
    b = berezinian(SuperMatrix.from_rows(even_rows + odd_rows, n))
    try:
        u = sqrt_even(rho * b * invert_even(w))
    except (NotASquare, ValueError) as exc:
        raise NotASquare(f"normalisation needs a rational square root at this point: {exc}") from exc
    # (H, Psi) -> (-H, -Psi) keeps both normalisations; fix the sign by
    # requiring det[H, e_xi1, ...] > 0 on the even body components
    orient = _body_det([H0] + [E[a] for a in range(k)], n) * _body_value(w)
    if orient == 0:
        raise DegenerateSurface("normal frame has no definite orientation")
    if orient < 0:
        u = -u
    Psi = _scale_right(Psi0, u)

    # first term: Psi^A d log rho / dz^A
    rinv = invert_even(rho)
    term1 = rho * 0
    for A in range(2 * n):
        if Psi[A]:
            term1 = term1 + Psi[A] * rinv * ev(P.pull(derivative(dv.rho, A)))

    # induced form, stored transposed with the odd-odd Koszul sign, and its inverse
    low = [[None] * npar for _ in range(npar)]
    for a in range(npar):
        for c in range(npar):
            val = _omega(E[a], E[c], n, par_parity[c])
            low[c][a] = -val if par_parity[a] and par_parity[c] else val
    try:
        up = matrix_inverse(low)
    except NotInvertible as exc:
        raise DegenerateSurface("induced two-form is degenerate at this point") from exc

    # second term
    omega_psi = [None] * (2 * n)      # Psi^A Omega_AB
    for i in range(n):
        omega_psi[n + i] = Psi[i]
        omega_psi[i] = -Psi[n + i]
    term2 = rho * 0
    for a in range(npar):
        for c in range(npar):
            if not up[a][c]:
                continue
            for B in range(2 * n):
                d2 = derivative(first[a][B], c)
                if not d2:
                    continue
                pb = amb.coordinate_parity(B)
                t = omega_psi[B] * ev(d2) * up[a][c]
                if (pb * (par_parity[a] + par_parity[c]) + par_parity[a]) % 2:
                    term2 = term2 + t
                else:
                    term2 = term2 - t
    return term1 - term2
