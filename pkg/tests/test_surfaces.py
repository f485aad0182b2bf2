import random
from fractions import Fraction

import pytest

from oddsymp.forms import DifferentialForm, tau_sharp
from oddsymp.grassmann import (
    SuperFunction,
    VarContext,
    derivative,
    evaluate,
    random_polynomial,
    random_superfunction,
    sqrt_even,
    substitute,
)
from oddsymp.parser import parse_expression
from oddsymp.surfaces import (
    ADJUSTED_TO_DUAL,
    FRAME_TO_DUAL,
    A_adjusted,
    A_param,
    AdjustedSurface,
    DegenerateSurface,
    EquationSurface,
    GraphSurface,
    P0_P1,
    ParamSurface,
    correspondence_sign,
    dual_A,
    dual_A_at,
    flat_parametrization,
    graph_parametrization,
    induced_delta_sharp,
    pullback_to_reduced,
    restrict_to,
)
from oddsymp.symplectic import (
    CoordinateMapPair,
    Semidensity,
    VolumeForm,
    buttin,
    delta_sharp,
    transform_density,
    verify_darboux,
)
from oddsymp.verify import SuiteConfig, random_form, random_point_map, verify_suite

CFG = SuiteConfig()


def P(text, ctx):
    return parse_expression(text, ctx)


def unit_root(rng, ctx):
    """A random even ``sigma`` with constant positive body; ``rho = sigma^2``."""
    sig = random_superfunction(rng, ctx, 0, 1, 2, 2)
    return sig - SuperFunction(ctx, {0: sig.body()}) + ctx.const(rng.randint(1, 3))


# --- worked example on E^(3.3) --------------------------------------------------

@pytest.mark.parametrize("seed", range(3))
def test_example_two(seed):
    rng = random.Random(seed)
    ctx = VarContext.named(3, 0, start=0)
    b = [SuperFunction(ctx, {0: random_polynomial(rng, ctx, 2, 3)}) for _ in range(3)]
    w = DifferentialForm(ctx, {(0, 1, 2): -ctx.one, (0,): b[0], (1,): b[1], (2,): b[2]})
    s = tau_sharp(w)
    t0, t1, t2 = ctx.theta(0), ctx.theta(1), ctx.theta(2)
    assert s.coeff == ctx.one + b[0] * t1 * t2 + b[1] * t2 * t0 + b[2] * t0 * t1
    M = AdjustedSurface(ctx)
    red = M.reduced
    r = [restrict_to(v, M) for v in b]
    d = lambda j, i: restrict_to(derivative(b[i], j), M)
    u1, u2 = red.theta(0), red.theta(1)
    a = A_adjusted(s, M).coeff
    ad = A_adjusted(delta_sharp(s), M).coeff
    assert a == r[2] * u1 - r[1] * u2
    assert ad == d(2, 1) - d(1, 2)
    P0, P1 = P0_P1(s, M)
    assert P0.coeff == ad * ad and P0.weight == 1
    assert P1.coeff == a * ad and P1.weight == 1
    # printed form of P1 is (d2b1 - d1b2)(b1 th2 - b2 th1) = -A(s) A(Delta# s)
    assert (d(2, 1) - d(1, 2)) * (r[1] * u2 - r[2] * u1) == -P1.coeff
    assert induced_delta_sharp(A_adjusted(s, M)).coeff == -ad


def test_theta0_independent_gives_zero():
    ctx = VarContext.named(3, 1)
    s = Semidensity(P("x1 + x2*th2*th3 + p1*th2", ctx))
    assert not A_adjusted(s, AdjustedSurface(ctx)).coeff


def test_closed_semidensity_has_zero_p():
    ctx = VarContext.named(2)
    s = Semidensity(P("1 + x1^2*x2 + 5*th1*th2", ctx))
    assert not delta_sharp(s).coeff
    P0, P1 = P0_P1(s, AdjustedSurface(ctx))
    assert not P0.coeff and not P1.coeff


def test_induced_delta_sharp_nilpotent_and_constants():
    red = VarContext.named(2, 1)
    t = Semidensity(random_superfunction(random.Random(1), red, 1, 2, 2, 3))
    assert not induced_delta_sharp(induced_delta_sharp(t)).coeff
    assert not induced_delta_sharp(Semidensity(red.const(7))).coeff


# --- identities on adjusted surfaces ----------------------------------------------

@pytest.mark.parametrize("ident", ["surface-induced-laplacian", "surface-form-correspondence",
                                   "surface-lemma-covariance"])
@pytest.mark.parametrize("n", [2, 3])
def test_surface_identities(ident, n):
    r = verify_suite(SuiteConfig(n=n, m=1, trials=50, seed=7), [ident])[0]
    assert r.failures == 0, r.counterexample


def test_correspondence_minus_sign_on_odd_degree():
    rng = random.Random(2)
    for n in (2, 3):
        ctx = VarContext.named(n)
        M = AdjustedSurface(ctx)
        for _ in range(10):
            w = random_form(rng, ctx, CFG)
            w1 = DifferentialForm(ctx, {I: c for I, c in w.terms.items() if len(I) % 2})
            assert A_adjusted(tau_sharp(w1), M).coeff == -tau_sharp(pullback_to_reduced(w1, M)).coeff
            assert correspondence_sign(w1) == w1


def test_correspondence_sign_on_functions():
    # degree 0: tau#(1) = th0 th1, so A gives +th1 where the minus-sign rule would give -th1
    ctx = VarContext.named(2)
    M = AdjustedSurface(ctx)
    one = DifferentialForm(ctx, {(): ctx.one})
    assert A_adjusted(tau_sharp(one), M).coeff == tau_sharp(pullback_to_reduced(one, M)).coeff


# --- frame formula and dual formula -----------------------------------------------

def psi_surface():
    amb = VarContext.named(2, 1, start=0)
    Pc = VarContext.named(1, 1, even="xi", odd="eta")
    xi, eta, psi = Pc.x(0), Pc.theta(0), Pc.pi(0)
    return amb, ParamSurface(amb, [psi * xi * eta, xi, Pc.zero, eta])


@pytest.mark.parametrize("pt", [-3, -1, 0, Fraction(1, 2), 2, 5])
def test_psi_surface_frame_value(pt):
    amb, S = psi_surface()
    val = A_param(S, VolumeForm.flat(amb), [pt])
    assert val.terms == {2: Fraction(2)}         # 2 * Psi
    assert str(val) == "2*p1"


def test_psi_surface_dual_value():
    amb = VarContext.named(2, 1, start=0)
    f = amb.x(0) - amb.pi(0) * amb.x(1) * amb.theta(1)
    phi = amb.theta(0)
    red = amb.reduced(0)
    G = GraphSurface(amb, red.pi(0) * red.x(0) * red.theta(0), red.zero)
    assert EquationSurface(f, phi, G).restrict(f) == red.zero
    val = dual_A(EquationSurface(f, phi, G), VolumeForm.flat(amb))
    assert val == red.pi(0)
    assert val in (red.pi(0), -red.pi(0))


def test_psi_surface_adjusted_value():
    # in the adjusted chart the flat volume becomes 1 + 2 th0 p1; its root differentiates to Psi
    amb = VarContext.named(2, 1, start=0)
    x0, x1, t0, t1, psi = amb.x(0), amb.x(1), amb.theta(0), amb.theta(1), amb.pi(0)
    m = CoordinateMapPair([x0 - psi * x1 * t1, x1 * (amb.one + psi * t0), t0, t1 * (amb.one - psi * t0)],
                          [x0 + psi * x1 * t1, x1 * (amb.one - psi * t0), t0, t1 * (amb.one + psi * t0)])
    rho = transform_density(Semidensity(amb.one, 1), m).coeff
    s = Semidensity(sqrt_even(rho))
    assert A_adjusted(s, AdjustedSurface(amb)).coeff == amb.reduced(0).pi(0)


@pytest.mark.parametrize("seed", range(10))
def test_flat_case_constants(seed):
    rng = random.Random(seed)
    n = rng.choice([2, 3])
    ctx = VarContext.named(n, 1, start=0)
    sig = unit_root(rng, ctx)
    dv = VolumeForm(sig * sig)
    M = AdjustedSurface(ctx)
    adj = A_adjusted(Semidensity(sig), M).coeff
    pt = [rng.randint(-2, 2) for _ in range(n - 1)]
    frame = A_param(flat_parametrization(ctx), dv, pt)
    assert frame.terms == evaluate(adj, pt).scale(FRAME_TO_DUAL / ADJUSTED_TO_DUAL).terms
    red = M.reduced
    G = GraphSurface(ctx, red.zero, red.zero)
    dual = dual_A(EquationSurface(ctx.x(0), ctx.theta(0), G), dv)
    assert adj == (restrict_to(sig, M) * dual).scale(ADJUSTED_TO_DUAL)


def random_graph(rng, n):
    ctx = VarContext.named(n, 1, start=0)
    red = ctx.reduced(0)
    sig = unit_root(rng, ctx)
    g = random_superfunction(rng, red, 0, 2, 2, 2)
    chi = random_superfunction(rng, red, 1, 1, 3, 2)
    chi = chi - SuperFunction(red, {m: c for m, c in chi.terms.items()
                                    if m.bit_count() == 1 and m & red.theta_bits})
    return ctx, sig, GraphSurface(ctx, g, chi)


@pytest.mark.parametrize("seed", range(16))
def test_frame_matches_dual_on_graphs(seed):
    rng = random.Random(seed)
    ctx, sig, G = random_graph(rng, rng.choice([2, 3]))
    dv = VolumeForm(sig * sig)
    pt = [rng.randint(-2, 2) for _ in range(ctx.n - 1)]
    frame = A_param(graph_parametrization(G), dv, pt)
    dual = dual_A_at(G, dv, pt)
    assert frame.terms == (evaluate(G.restrict(sig), pt) * dual).scale(FRAME_TO_DUAL).terms


@pytest.mark.parametrize("seed", range(4))
def test_dual_weight_law(seed):
    rng = random.Random(seed)
    ctx, sig, G = random_graph(rng, 2)
    dv = VolumeForm(sig * sig)
    f, phi = G.equations()
    base = dual_A(EquationSurface(f, phi, G), dv)
    bq = Fraction(rng.choice([1, 2, 3]), rng.choice([1, 5]))
    c = Fraction(rng.choice([-2, 1, 3]), rng.choice([1, 2]))
    a = bq * c * c
    scaled = dual_A(EquationSurface(f.scale(a), phi.scale(bq), G), dv)
    assert scaled == base.scale(c if c > 0 else -c)


@pytest.mark.parametrize("seed", range(4))
def test_dual_weight_law_function_factor(seed):
    rng = random.Random(seed)
    ctx, sig, G = random_graph(rng, 2)
    dv = VolumeForm(sig * sig)
    f, phi = G.equations()
    b = unit_root(rng, ctx)
    base = dual_A(EquationSurface(f, phi, G), dv)
    assert dual_A(EquationSurface(b * b * f, phi, G), dv) == G.restrict(b) * base


def test_frame_symbolic_mode_on_flat_data():
    ctx = VarContext.named(2, 1, start=0)
    dv = VolumeForm(P("4 + 4*th0*p1*x1", ctx))
    val = A_param(flat_parametrization(ctx), dv, None)
    # sqrt(rho) = 2 + th0 p1 x1, and d/dth0 of it is p1 x1
    assert str(val) == "2*xi1*p1"


def test_degenerate_surface_rejected():
    amb = VarContext.named(2, 0)
    Pc = VarContext.named(1, 0, even="xi", odd="eta")
    # tangent plane spanned by d/dx0 and d/dth1: the induced form vanishes
    S = ParamSurface(amb, [Pc.x(0), Pc.zero, Pc.zero, Pc.theta(0)])
    with pytest.raises(DegenerateSurface):
        A_param(S, VolumeForm.flat(amb), [1])
    with pytest.raises(DegenerateSurface):
        EquationSurface(amb.x(0), amb.theta(1))


# --- invariance of the frame formula -----------------------------------------------

def _reparam_value(m, ctx, rho, pt):
    Fp = flat_parametrization(ctx)
    newP = ParamSurface(ctx, [substitute(f, Fp.images) for f in m.forward])
    rt = transform_density(Semidensity(rho, 1), m).coeff
    return A_param(newP, VolumeForm(rt), pt)


def _flow(rng, ctx, j):
    h = random_superfunction(rng, ctx, 0, 2, 2, 2, use_aux=False)
    Q = ctx.pi(j) * h
    co = ctx.coordinates()
    return CoordinateMapPair([z + buttin(Q, z) for z in co], [z - buttin(Q, z) for z in co])


def _orientation_preserving_point_map(rng, ctx):
    while True:
        m = random_point_map(rng, ctx)
        det = m.even_jacobian_det()
        if det.body().is_constant() and det.body().constant_value() > 0:
            return m


@pytest.mark.parametrize("seed", range(4))
def test_frame_invariant_under_point_maps(seed):
    rng = random.Random(seed)
    ctx = VarContext.named(rng.choice([2, 3]), 1, start=0)
    sig = unit_root(rng, ctx)
    m = _orientation_preserving_point_map(rng, ctx)
    pt = [rng.randint(-2, 2) for _ in range(ctx.n - 1)]
    want = A_param(flat_parametrization(ctx), VolumeForm(sig * sig), pt)
    assert _reparam_value(m, ctx, sig * sig, pt).terms == want.terms


@pytest.mark.parametrize("seed", range(2))
def test_frame_invariant_under_canonical_flows(seed):
    rng = random.Random(seed)
    ctx = VarContext.named(3, 2, start=0)
    sig = unit_root(rng, ctx)
    m = _flow(rng, ctx, 0).then(_orientation_preserving_point_map(rng, ctx)).then(_flow(rng, ctx, 1))
    assert verify_darboux(m)[0]
    pt = [rng.randint(-2, 2) for _ in range(ctx.n - 1)]
    want = A_param(flat_parametrization(ctx), VolumeForm(sig * sig), pt)
    assert _reparam_value(m, ctx, sig * sig, pt).terms == want.terms
