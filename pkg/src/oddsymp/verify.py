"""Seeded randomized verification of the algebraic identities.

Every identity is a function ``trial(rng, cfg, ops) -> None | str``; ``None``
means the identity held, a string is a printed counterexample.  ``ops`` holds
the operators under test so that a harness can swap in a deliberately broken
one.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass, field, asdict
from fractions import Fraction
from itertools import combinations
from typing import Callable

from .grassmann import (
    SuperFunction,
    VarContext,
    berezin_integral,
    derivative,
    invert_even,
    random_polynomial,
    random_superfunction,
    substitute,
)
from .symplectic import (
    CoordinateMapPair,
    Semidensity,
    VolumeForm,
    buttin,
    delta0,
    delta_Q,
    delta_Q_coordinate,
    delta_sharp,
    delta_v,
    delta_v_divergence,
    point_transformation,
    transform_density,
)
from .forms import (
    DifferentialForm,
    Polyvector,
    exterior_d,
    interior,
    tau,
    tau_sharp,
    tau_sharp_inverse,
)
from .surfaces import (A_adjusted, AdjustedSurface, correspondence_sign, induced_delta_sharp, lift,
                       pullback_to_reduced, restrict_to)

__all__ = ["SuiteConfig", "IdentityRecord", "IDENTITIES", "verify_suite", "report_json",
           "random_point_map", "random_form", "random_polyvector", "DEFAULT_OPS"]


@dataclass
class SuiteConfig:
    n: int | None = None
    m: int = 1
    seed: int = 0
    trials: int = 50
    max_even_degree: int = 2
    max_odd_degree: int = 3
    coeff_bound: int = 3
    timing: bool = False


@dataclass
class IdentityRecord:
    id: str
    trials: int
    failures: int
    seed: int
    counterexample: str | None
    ms: int = 0


DEFAULT_OPS = {
    "buttin": buttin,
    "delta0": delta0,
    "delta_v": delta_v,
}


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def _n(rng, cfg, choices):
    return cfg.n if cfg.n is not None else rng.choice(choices)


def _ctx(rng, cfg, choices=(1, 2, 3)) -> VarContext:
    return VarContext.named(_n(rng, cfg, choices), cfg.m)


def _sf(rng, ctx, cfg, parity=None):
    if parity is None:
        parity = rng.randint(0, 1)
    return random_superfunction(rng, ctx, parity, cfg.max_even_degree, cfg.max_odd_degree, cfg.coeff_bound)


def _unit(rng, ctx, cfg):
    """``1 + (even function without body constant)``; invertible, never zero body."""
    f = _sf(rng, ctx, cfg, 0)
    return f - SuperFunction(ctx, {0: f.body()}) + ctx.const(rng.randint(1, 3))


def _nilpotent_volume(rng, ctx, cfg):
    t = _sf(rng, ctx, cfg, 0)
    return ctx.one + t - SuperFunction(ctx, {0: t.body()})


def random_form(rng, ctx: VarContext, cfg, degree=None) -> DifferentialForm:
    terms = {}
    for k in range(ctx.n + 1):
        if degree is not None and k != degree:
            continue
        for I in combinations(range(ctx.n), k):
            if rng.random() < 0.6:
                c = SuperFunction(ctx, {0: random_polynomial(rng, ctx, cfg.max_even_degree, cfg.coeff_bound)})
                if ctx.m and rng.random() < 0.4:
                    c = c + SuperFunction(ctx, {1 << ctx.n: random_polynomial(rng, ctx, cfg.max_even_degree,
                                                                               cfg.coeff_bound)})
                terms[I] = c
    return DifferentialForm(ctx, terms)


def random_polyvector(rng, ctx: VarContext, cfg) -> Polyvector:
    return Polyvector(ctx, random_form(rng, ctx, cfg).terms)


def random_point_map(rng, ctx: VarContext) -> CoordinateMapPair:
    """Triangular polynomial change ``x^i = a_i x~^i + p_i(x~^<i)`` lifted canonically."""
    n = ctx.n
    a = [rng.choice([1, -1, 2, Fraction(1, 2), 3]) for _ in range(n)]
    bwd = []
    for i in range(n):
        p = ctx.zero
        for j in range(i):
            p = p + (ctx.x(j) * ctx.x(j)).scale(rng.randint(-2, 2)) + ctx.x(j).scale(rng.randint(-1, 1))
        bwd.append(ctx.x(i).scale(a[i]) + p)
    fwd = []
    for i in range(n):
        rest = bwd[i] - ctx.x(i).scale(a[i])
        if i:
            rest = substitute(rest, fwd + [ctx.zero] * (2 * n - i))
        fwd.append((ctx.x(i) - rest).scale(1 / Fraction(a[i])))
    return point_transformation(fwd, bwd)


# ---------------------------------------------------------------------------
# identities
# ---------------------------------------------------------------------------

def _pair(rng, cfg):
    ctx = _ctx(rng, cfg)
    return ctx, _sf(rng, ctx, cfg), _sf(rng, ctx, cfg)


def _sign(p):
    return -1 if p % 2 else 1


def t_graded_commutative(rng, cfg, ops):
    ctx, f, g = _pair(rng, cfg)
    if f * g != (g * f).scale(_sign(f.parity() * g.parity())):
        return f"f = {f}; g = {g}"


def t_antisymmetry(rng, cfg, ops):
    ctx, f, g = _pair(rng, cfg)
    br = ops["buttin"]
    s = -_sign((f.parity() + 1) * (g.parity() + 1))
    if br(f, g) != br(g, f).scale(s):
        return f"f = {f}; g = {g}"


def t_jacobi(rng, cfg, ops):
    ctx = _ctx(rng, cfg)
    f, g, h = (_sf(rng, ctx, cfg) for _ in range(3))
    br = ops["buttin"]
    pf, pg, ph = f.parity(), g.parity(), h.parity()
    total = (br(f, br(g, h)).scale(_sign((pf + 1) * (ph + 1)))
             + br(g, br(h, f)).scale(_sign((pg + 1) * (pf + 1)))
             + br(h, br(f, g)).scale(_sign((ph + 1) * (pg + 1))))
    if total:
        return f"f = {f}; g = {g}; h = {h}"


def t_delta0_nilpotent(rng, cfg, ops):
    ctx = _ctx(rng, cfg)
    f = _sf(rng, ctx, cfg)
    if ops["delta0"](ops["delta0"](f)):
        return f"f = {f}"


def t_deltasharp_nilpotent(rng, cfg, ops):
    ctx = _ctx(rng, cfg)
    s = Semidensity(_sf(rng, ctx, cfg))
    if delta_sharp(delta_sharp(s)).coeff:
        return f"s = {s.coeff}"


def _volume(rng, ctx, cfg):
    return VolumeForm(_nilpotent_volume(rng, ctx, cfg))


def t_leibniz_bracket(rng, cfg, ops):
    ctx, f, g = _pair(rng, cfg)
    dv = _volume(rng, ctx, cfg)
    D = lambda h: ops["delta_v"](h, dv)
    br = ops["buttin"]
    if D(br(f, g)) != br(D(f), g) + br(f, D(g)).scale(_sign(f.parity() + 1)):
        return f"f = {f}; g = {g}; rho = {dv.rho}"


def t_leibniz_product(rng, cfg, ops):
    ctx, f, g = _pair(rng, cfg)
    dv = _volume(rng, ctx, cfg)
    D = lambda h: ops["delta_v"](h, dv)
    s = _sign(f.parity())
    if D(f * g) != D(f) * g + (f * D(g)).scale(s) + ops["buttin"](f, g).scale(s):
        return f"f = {f}; g = {g}; rho = {dv.rho}"


def _root_volume(rng, ctx, cfg):
    sig = _unit(rng, ctx, cfg)
    return sig, VolumeForm(sig * sig)


def t_product_rule(rng, cfg, ops):
    ctx = _ctx(rng, cfg)
    f = _sf(rng, ctx, cfg)
    sig, dv = _root_volume(rng, ctx, cfg)
    s = dv.sqrt()
    lhs = delta_sharp(f * s).coeff
    rhs = ops["delta_v"](f, dv) * s.coeff + (f * delta_sharp(s).coeff).scale(_sign(f.parity()))
    if lhs != rhs:
        return f"f = {f}; sqrt(rho) = {sig}"


def t_delta_v_squared(rng, cfg, ops):
    ctx = _ctx(rng, cfg)
    f = _sf(rng, ctx, cfg)
    sig, dv = _root_volume(rng, ctx, cfg)
    D = lambda h: ops["delta_v"](h, dv)
    t = invert_even(sig) * delta0(sig)
    if D(D(f)) != ops["buttin"](t, f):
        return f"f = {f}; sqrt(rho) = {sig}"


def t_divergence_form(rng, cfg, ops):
    ctx = _ctx(rng, cfg)
    f = _sf(rng, ctx, cfg)
    dv = _volume(rng, ctx, cfg)
    if delta_v_divergence(f, dv) != ops["delta_v"](f, dv):
        return f"f = {f}; rho = {dv.rho}"


def t_covariance(rng, cfg, ops):
    ctx = _ctx(rng, cfg)
    chart = random_point_map(rng, ctx)
    s = Semidensity(_sf(rng, ctx, cfg))
    det = chart.even_jacobian_det()
    if chart.berezinian() != det * det:
        return f"Ber != det^2 for map {[str(z) for z in chart.backward]}"
    if chart.ber_power(Fraction(1, 2)) != det:
        return f"Ber^(1/2) != det for map {[str(z) for z in chart.backward]}"
    lhs = delta_sharp(transform_density(s, chart))
    rhs = transform_density(delta_sharp(s), chart)
    if lhs.coeff != rhs.coeff:
        return f"s = {s.coeff}; map x(x~) = {[str(z) for z in chart.backward[:ctx.n]]}"


def t_delta_q_commutes(rng, cfg, ops):
    ctx = _ctx(rng, cfg)
    Q = _sf(rng, ctx, cfg, 1)
    s = _sf(rng, ctx, cfg)
    d0 = ops["delta0"]
    dq = lambda c: d0(Q) * c - ops["buttin"](Q, c)
    if d0(dq(s)) != dq(d0(s)):
        return f"Q = {Q}; s = {s}"


def t_delta_q_forms(rng, cfg, ops):
    ctx = _ctx(rng, cfg)
    Q = _sf(rng, ctx, cfg, 1)
    s = Semidensity(_sf(rng, ctx, cfg))
    if delta_Q(s, Q).coeff != delta_Q_coordinate(s, Q).coeff:
        return f"Q = {Q}; s = {s.coeff}"


def t_c_constancy(rng, cfg, ops):
    ctx = _ctx(rng, cfg)
    h = _sf(rng, ctx, cfg)
    c = rng.randint(-5, 5)
    s = delta0(h) + ctx.monomial(*range(ctx.n)).scale(c)
    if delta0(s):
        return f"Delta0 s != 0 for h = {h}"
    top = berezin_integral(s)
    if any(derivative(top, i) for i in range(ctx.n)):
        return f"top coefficient {top} is not constant for h = {h}"


def t_tau_sharp_d(rng, cfg, ops):
    ctx = VarContext.named(_n(rng, cfg, (2, 3, 4)), cfg.m)
    w = random_form(rng, ctx, cfg)
    if delta_sharp(tau_sharp(w)).coeff != tau_sharp(exterior_d(w)).coeff:
        return f"w = {w}"


def t_tau_sharp_bijection(rng, cfg, ops):
    ctx = VarContext.named(_n(rng, cfg, (1, 2, 3, 4)), cfg.m)
    w = random_form(rng, ctx, cfg)
    s = Semidensity(_sf(rng, ctx, cfg))
    if tau_sharp_inverse(tau_sharp(w)) != w or tau_sharp(tau_sharp_inverse(s)).coeff != s.coeff:
        return f"w = {w}; s = {s.coeff}"


def t_interior(rng, cfg, ops):
    ctx = VarContext.named(_n(rng, cfg, (2, 3, 4)), cfg.m)
    w = random_form(rng, ctx, cfg)
    T = random_polyvector(rng, ctx, cfg)
    if tau_sharp(interior(T, w)).coeff != tau(T) * tau_sharp(w).coeff:
        return f"T = {T}; w = {w}"


def _surface_ctx(rng, cfg):
    n = cfg.n if cfg.n is not None and cfg.n >= 2 else rng.choice((2, 3))
    return VarContext.named(n, cfg.m)


def t_surface_induced_laplacian(rng, cfg, ops):
    ctx = _surface_ctx(rng, cfg)
    M = AdjustedSurface(ctx)
    s = Semidensity(_sf(rng, ctx, cfg))
    lhs = A_adjusted(delta_sharp(s), M).coeff + induced_delta_sharp(A_adjusted(s, M)).coeff
    if lhs:
        return f"s = {s.coeff}"


def t_surface_form_correspondence(rng, cfg, ops):
    ctx = _surface_ctx(rng, cfg)
    M = AdjustedSurface(ctx)
    w = random_form(rng, ctx, cfg)
    lhs = A_adjusted(tau_sharp(w), M).coeff
    rhs = -tau_sharp(pullback_to_reduced(correspondence_sign(w), M)).coeff
    if lhs != rhs:
        return f"w = {w}"


def t_surface_lemma_covariance(rng, cfg, ops):
    ctx = _surface_ctx(rng, cfg)
    M = AdjustedSurface(ctx)
    red = M.reduced
    QM = _sf(rng, red, cfg, 1)
    R1 = _sf(rng, ctx, cfg, 1)
    R2 = _sf(rng, ctx, cfg, 0)
    x0, th0 = ctx.x(0), ctx.theta(0)
    Q = lift(QM, ctx) + x0 * x0 * R1 + x0 * th0 * R2
    s = Semidensity(_sf(rng, ctx, cfg))
    lhs = A_adjusted(delta_Q(s, Q), M)
    rhs = delta_Q(A_adjusted(s, M), restrict_to(Q, M))
    if lhs.coeff != rhs.coeff:
        return f"Q = {Q}; s = {s.coeff}"


IDENTITIES: dict[str, Callable] = {
    "graded-commutativity": t_graded_commutative,
    "antisymmetry": t_antisymmetry,
    "jacobi": t_jacobi,
    "delta0-nilpotent": t_delta0_nilpotent,
    "deltasharp-nilpotent": t_deltasharp_nilpotent,
    "leibniz-bracket": t_leibniz_bracket,
    "leibniz-product": t_leibniz_product,
    "product-rule": t_product_rule,
    "delta-v-squared": t_delta_v_squared,
    "divergence-form": t_divergence_form,
    "covariance": t_covariance,
    "delta-q-commutes": t_delta_q_commutes,
    "delta-q-forms": t_delta_q_forms,
    "c-constancy": t_c_constancy,
    "tau-sharp-d": t_tau_sharp_d,
    "tau-sharp-bijection": t_tau_sharp_bijection,
    "interior-product": t_interior,
    "surface-induced-laplacian": t_surface_induced_laplacian,
    "surface-form-correspondence": t_surface_form_correspondence,
    "surface-lemma-covariance": t_surface_lemma_covariance,
}


def verify_suite(cfg: SuiteConfig, ids=None, overrides: dict | None = None) -> list[IdentityRecord]:
    """Run the selected identities; failures are reported, never raised."""
    if cfg.trials < 1:
        raise ValueError("trials must be >= 1")
    ops = dict(DEFAULT_OPS)
    ops.update(overrides or {})
    ids = list(ids or IDENTITIES)
    unknown = [i for i in ids if i not in IDENTITIES]
    if unknown:
        raise KeyError(f"unknown identity id(s): {', '.join(unknown)}")
    out = []
    for ident in ids:
        rng = random.Random(f"{cfg.seed}:{ident}")
        start = time.perf_counter()
        failures = 0
        first = None
        for _ in range(cfg.trials):
            res = IDENTITIES[ident](rng, cfg, ops)
            if res is not None:
                failures += 1
                if first is None:
                    first = res
        ms = int((time.perf_counter() - start) * 1000) if cfg.timing else 0
        out.append(IdentityRecord(ident, cfg.trials, failures, cfg.seed, first, ms))
    return out


def report_json(records) -> dict:
    return {"suite": [asdict(r) for r in records]}
