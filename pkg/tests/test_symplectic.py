import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from oddsymp.grassmann import ParityError, SuperFunction, VarContext, random_superfunction, substitute
from oddsymp.parser import parse_expression
from oddsymp.symplectic import (
    CoordinateMapPair,
    Semidensity,
    VolumeForm,
    buttin,
    delta0,
    delta_Q,
    delta_sharp,
    delta_v,
    diagnostics,
    ham_field,
    point_transformation,
    transform_density,
    verify_darboux,
)
from oddsymp.verify import random_point_map

import oracles as O
from conftest import rand_sf, seeds


def P(text, ctx):
    return parse_expression(text, ctx)


@settings(max_examples=60)
@given(seeds, seeds, st.sampled_from([1, 2, 3]))
def test_bracket_matches_right_derivative_oracle(s1, s2, n):
    f, g = rand_sf(s1, n=n), rand_sf(s2, n=n)
    assert O.from_sf(buttin(f, g)) == O.bracket(O.from_sf(f), O.from_sf(g), n)


@settings(max_examples=60)
@given(seeds, st.sampled_from([1, 2, 3]))
def test_delta0_matches_oracle(s, n):
    f = rand_sf(s, n=n)
    assert O.from_sf(delta0(f)) == O.delta0(O.from_sf(f), n)


def test_canonical_brackets(ctx2):
    x1, x2, t1, t2 = ctx2.x(0), ctx2.x(1), ctx2.theta(0), ctx2.theta(1)
    assert buttin(x1, t1) == ctx2.one
    assert buttin(t1, x1) == -ctx2.one
    assert buttin(x1, t2) == ctx2.zero
    assert not buttin(x1, x2) and not buttin(t1, t2)
    assert buttin(x1 * t1, x1) == -x1


def test_hamiltonian_field(ctx2):
    D = ham_field(ctx2.theta(0))
    assert D[0] == -ctx2.one and all(not c for c in D[1:])


def test_delta_v_example(ctx2):
    dv = VolumeForm(P("1 + 2*p1*th1", ctx2))
    assert delta_v(ctx2.x(0), dv) == -ctx2.pi(0)
    assert delta_v(ctx2.x(0), VolumeForm.flat(ctx2)) == ctx2.zero


def test_inhomogeneous_bracket_is_bilinear(ctx2):
    f = P("x1 + th1", ctx2)
    g = P("x2*th2 + th1*th2", ctx2)
    assert buttin(f, g) == buttin(ctx2.x(0), g) + buttin(ctx2.theta(0), g)


def test_delta_q_odd_only(ctx2):
    with pytest.raises(ParityError):
        delta_Q(Semidensity(ctx2.one), ctx2.x(0))


@given(seeds)
def test_delta_q_is_infinitesimal_transform(s):
    # Q = p1 h is square-zero, so z~ = z + {Q, z} is an exact canonical map
    # whose effect on a semidensity is delta_Q and whose Berezinian is 1 + 2 Delta0 Q
    ctx = VarContext.named(2, 1)
    rng = random.Random(s)
    h = random_superfunction(rng, ctx, 0, 2, 2, 2, use_aux=False)
    p = ctx.pi(0)
    Q = p * h
    coords = ctx.coordinates()
    m = CoordinateMapPair([z + buttin(Q, z) for z in coords], [z - buttin(Q, z) for z in coords])
    assert verify_darboux(m)[0]
    sc = random_superfunction(rng, ctx, 0, 2, 2, 2, use_aux=False)
    new = transform_density(Semidensity(sc), m).coeff
    assert new - sc == delta_Q(Semidensity(sc), Q).coeff
    assert m.berezinian() == ctx.one + delta0(Q).scale(2)


# --- transformations -------------------------------------------------------

def test_rescaling_transform():
    ctx = VarContext.named(1)
    # x = x~/2, th = 2 th~
    m = CoordinateMapPair([ctx.x(0).scale(2), ctx.theta(0).scale(Fraction(1, 2))],
                          [ctx.x(0).scale(Fraction(1, 2)), ctx.theta(0).scale(2)])
    assert m.berezinian() == ctx.const(Fraction(1, 4))
    s = Semidensity(ctx.one)
    assert transform_density(s, m).coeff == ctx.const(Fraction(1, 2))


def test_darboux_check_reports_defects():
    ctx = VarContext.named(1)
    m = CoordinateMapPair([ctx.x(0), ctx.theta(0).scale(2)], [ctx.x(0), ctx.theta(0).scale(Fraction(1, 2))])
    ok, bad = verify_darboux(m)
    assert not ok
    assert ("x1", "th1", "2") in bad and ("th1", "x1", "-2") in bad


@settings(max_examples=25)
@given(seeds, st.sampled_from([1, 2, 3]))
def test_point_map_ber_is_det_squared(s, n):
    ctx = VarContext.named(n)
    m = random_point_map(random.Random(s), ctx)
    assert verify_darboux(m)[0]
    det = m.even_jacobian_det()
    assert m.berezinian() == det * det
    # independent determinant of d x / d x~ from sympy
    bwd = [O.from_sf(z).get((), 0) for z in m.backward[:n]]
    want = O.jacobian_det(bwd, n)
    got = O.from_sf(det).get((), 0)
    assert (want - got).equals(0)


def _psi_map():
    ctx = VarContext.named(2, 1, start=0)
    x0, x1, t0, t1, psi = ctx.x(0), ctx.x(1), ctx.theta(0), ctx.theta(1), ctx.pi(0)
    fwd = [x0 - psi * x1 * t1, x1 * (ctx.one + psi * t0), t0, t1 * (ctx.one - psi * t0)]
    bwd = [x0 + psi * x1 * t1, x1 * (ctx.one - psi * t0), t0, t1 * (ctx.one + psi * t0)]
    return ctx, CoordinateMapPair(fwd, bwd)


def test_psi_map_is_darboux_and_volume():
    ctx, m = _psi_map()
    assert verify_darboux(m)[0]
    rho = transform_density(Semidensity(ctx.one, 1), m).coeff
    # first-order supertrace of the Jacobian: Ber = 1 + 2 th0~ p1
    assert rho == ctx.one + (ctx.theta(0) * ctx.pi(0)).scale(2)
    assert str(rho) == "1 + 2*th0*p1"


@pytest.mark.xfail(strict=True, reason="printed volume form 1 + 2*Psi*th0~ has the opposite sign; its "
                                       "own consequence, the surface value Psi, needs 1 - 2*Psi*th0~")
def test_psi_map_volume_printed_form():
    ctx, m = _psi_map()
    rho = transform_density(Semidensity(ctx.one, 1), m).coeff
    assert rho == P("1 + 2*p1*th0", ctx)


def test_composition_and_inverse():
    ctx = VarContext.named(2)
    rng = random.Random(3)
    a, b = random_point_map(rng, ctx), random_point_map(rng, ctx)
    ab = a.then(b)
    s = Semidensity(random_superfunction(rng, ctx, 0, 2, 2, 2))
    assert transform_density(s, ab).coeff == transform_density(transform_density(s, a), b).coeff
    back = transform_density(transform_density(s, a), a.inverse())
    assert back.coeff == s.coeff


def test_point_transformation_lifts_thetas():
    ctx = VarContext.named(2)
    x1, x2 = ctx.x(0), ctx.x(1)
    # x~1 = x1, x~2 = x2 + x1^2
    m = point_transformation([x1, x2 + x1 * x1], [x1, x2 - x1 * x1])
    assert verify_darboux(m)[0]
    assert m.is_point_transformation()
    assert m.berezinian() == ctx.one


# --- diagnostics -----------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("c", [9, -2, 0])
def test_diagnostics_constant_c(n, c):
    ctx = VarContext.named(n, 1)
    s = Semidensity(ctx.one + ctx.monomial(*range(n)).scale(c))
    d = diagnostics(s)
    js = d.as_json()
    assert js["master_equation"] is True
    assert js["nu"] == 0
    assert js["c"] == c
    assert js["normal"] is (c == 0)


@pytest.mark.parametrize("seed", range(5))
def test_diagnostics_nu_from_delta0(seed):
    ctx = VarContext.named(2, 1)
    h = P("x1*th1", ctx) + random_superfunction(random.Random(seed), ctx, 1, 2, 3, 2, use_aux=False)
    s = Semidensity(delta0(h) - ctx.pi(0) * h)
    d = diagnostics(s)
    assert d.nu == ctx.pi(0)
    assert d.as_json()["nu"] == "p1"


def test_diagnostics_nu_equals_pi():
    ctx = VarContext.named(2, 1)
    # s = exp(p1 * th1 * x1)-type: s = 1 + p1 x1 th1 gives Delta0 s = -p1 * ... constant ratio
    s = Semidensity(ctx.one + ctx.pi(0) * ctx.x(0) * ctx.theta(0))
    d = diagnostics(s)
    assert d.nu == -ctx.pi(0)
    assert d.master_equation is False
