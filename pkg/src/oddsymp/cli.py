"""Command line front end.

Each command is one line: a verb followed by whitespace-separated arguments.
Arguments are names bound with ``define`` or inline expressions.  Quote an
expression that contains spaces (shell-style quoting).  ``define`` takes the
rest of the line after ``=`` verbatim.

Examples::

    oddsymp bracket x1 th1
    oddsymp --n 3 diagnostics "1 + 9*th1*th2*th3"
    oddsymp example2
    oddsymp --n 2 --trials 100 --seed 42 verify jacobi
    oddsymp --script session.txt
"""
from __future__ import annotations

import argparse
import json
import random
import shlex
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from .grassmann import (
    GrassmannError,
    SuperFunction,
    VarContext,
    berezin_integral,
    derivative,
    random_polynomial,
)
from .parser import ParseError, parse_expression
from .symplectic import (
    CoordinateMapPair,
    Semidensity,
    VolumeForm,
    buttin,
    delta0,
    delta_Q,
    delta_sharp,
    delta_v,
    diagnostics,
    point_transformation,
    transform_density,
    verify_darboux,
)
from .forms import DifferentialForm, Polyvector, exterior_d, tau, tau_sharp, tau_sharp_inverse
from .surfaces import (
    A_adjusted,
    AdjustedSurface,
    EquationSurface,
    GraphSurface,
    P0_P1,
    dual_A,
    restrict_to,
)
from .verify import IDENTITIES, SuiteConfig, report_json, verify_suite

__all__ = ["Session", "CommandError", "CommandResult", "run_command", "main", "EXAMPLE2_GOLDEN"]

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2

KINDS = ("function", "density", "volume", "form", "polyvector", "map", "pointmap", "surface")

# printed values of the two-dimensional surface example, zero-based indices
EXAMPLE2_GOLDEN = {
    "w": "-dx0*dx1*dx2 + b0*dx0 + b1*dx1 + b2*dx2",
    "s": "1 + b0*th1*th2 + b1*th2*th0 + b2*th0*th1",
    "A(s)": "b2*th1 - b1*th2",
    "A(Delta# s)": "d2b1 - d1b2",
    "P0": "(d2b1 - d1b2)^2",
    "P1": "(d2b1 - d1b2)*(b1*th2 - b2*th1)",
}
# the printed P1 is A(Delta# s) * (-A(s)); P0_P1 returns A(s) * A(Delta# s)
EXAMPLE2_P1_SIGN = -1


class CommandError(Exception):
    """Bad command usage: unknown verb, unbound name, wrong arity."""


@dataclass
class CommandResult:
    text: str
    data: dict
    ok: bool = True


@dataclass
class Session:
    """Context, named bindings and the command history that produced them."""

    n: int = 3
    m: int = 0
    zero_based: bool = False
    seed: int = 0
    trials: int = 50
    max_even_degree: int = 2
    max_odd_degree: int = 3
    timing: bool = False
    verify_n: int | None = None
    bindings: dict = field(default_factory=dict)
    history: list = field(default_factory=list)

    def __post_init__(self):
        self._rebuild()

    def _rebuild(self):
        start = 0 if self.zero_based else 1
        self.ctx = VarContext.named(self.n, self.m, start=start)
        c = self.ctx
        # forms and polyvectors are typed with dx / del generators in place of th
        self.form_ctx = VarContext(c.n, c.m, c.even_names, tuple("d" + e for e in c.even_names), c.aux_names)
        self.pv_ctx = VarContext(c.n, c.m, c.even_names, tuple("del" + e for e in c.even_names), c.aux_names)

    def set_context(self, n: int, m: int, zero_based: bool):
        self.n, self.m, self.zero_based = n, m, zero_based
        self.bindings.clear()
        self._rebuild()

    def to_script(self) -> str:
        head = [f"# oddsymp session", f"context {self.n} {self.m} {'zero' if self.zero_based else 'one'}"]
        return "\n".join(head + self.history) + "\n"

    # value lookup --------------------------------------------------------
    def function_bindings(self) -> dict:
        return {k: v for k, v in self.bindings.items() if isinstance(v, SuperFunction)}

    def expr(self, text: str, ctx: VarContext | None = None) -> SuperFunction:
        ctx = ctx or self.ctx
        b = self.bindings.get(text)
        if isinstance(b, SuperFunction) and b.ctx == ctx:
            return b
        if isinstance(b, (Semidensity, VolumeForm)) and ctx == self.ctx:
            return b.coeff if isinstance(b, Semidensity) else b.rho
        return parse_expression(text, ctx, {k: v for k, v in self.function_bindings().items() if v.ctx == ctx})

    def density(self, text: str) -> Semidensity:
        b = self.bindings.get(text)
        if isinstance(b, Semidensity):
            return b
        if isinstance(b, VolumeForm):
            return Semidensity(b.rho, 1)
        return Semidensity(self.expr(text))

    def volume(self, text: str) -> VolumeForm:
        b = self.bindings.get(text)
        if isinstance(b, VolumeForm):
            return b
        if isinstance(b, Semidensity) and b.weight == 1:
            return VolumeForm(b.coeff, b.chart)
        return VolumeForm(self.expr(text))

    def _table(self, text: str, ctx: VarContext, cls):
        b = self.bindings.get(text)
        if isinstance(b, cls):
            return b
        f = parse_expression(text, ctx, {})
        terms = {}
        for mask, c in f.terms.items():
            # split_monomial convention: aux constants move left of the generators
            I = tuple(i for i in range(ctx.n) if mask >> i & 1)
            p = mask & ctx.aux_bits
            sign = -1 if (len(I) * p.bit_count()) % 2 else 1
            v = SuperFunction(self.ctx, {p: c if sign > 0 else -c})
            terms[I] = terms[I] + v if I in terms else v
        return cls(self.ctx, terms)

    def form(self, text: str) -> DifferentialForm:
        return self._table(text, self.form_ctx, DifferentialForm)

    def polyvector(self, text: str) -> Polyvector:
        return self._table(text, self.pv_ctx, Polyvector)

    def chart_map(self, text: str) -> CoordinateMapPair:
        b = self.bindings.get(text)
        if not isinstance(b, CoordinateMapPair):
            raise CommandError(f"{text!r} is not a bound coordinate map")
        return b

    def surface(self, text: str):
        b = self.bindings.get(text)
        if not isinstance(b, (AdjustedSurface, GraphSurface, EquationSurface)):
            raise CommandError(f"{text!r} is not a bound surface")
        return b

    # printing ------------------------------------------------------------
    def show_form(self, w) -> str:
        if not w.terms:
            return "0"
        ctx = self.form_ctx if isinstance(w, DifferentialForm) else self.pv_ctx
        out = ctx.zero
        for I, c in w.terms.items():
            out = out + SuperFunction(ctx, dict(c.terms)) * ctx.monomial(*I)
        return str(out)


def _split_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(";")]


def _define(session: Session, rest: str, overwrite: bool) -> CommandResult:
    head, eq, body = rest.partition("=")
    if not eq:
        raise CommandError("usage: define [KIND] NAME = VALUE")
    words = head.split()
    if len(words) == 1:
        kind, name = "function", words[0]
    elif len(words) == 2 and words[0] in KINDS:
        kind, name = words
    else:
        raise CommandError(f"usage: define [{'|'.join(KINDS)}] NAME = VALUE")
    if not name.isidentifier():
        raise CommandError(f"invalid name {name!r}")
    reserved = set(session.ctx.even_names + session.ctx.odd_names + session.ctx.aux_names)
    if name in reserved:
        raise CommandError(f"{name!r} is a coordinate name")
    if name in session.bindings and not overwrite:
        raise CommandError(f"{name!r} is already bound; use redefine to overwrite")
    body = body.strip()
    ctx = session.ctx
    if kind == "function":
        value = session.expr(body)
    elif kind == "density":
        value = Semidensity(session.expr(body))
    elif kind == "volume":
        value = VolumeForm(session.expr(body))
    elif kind == "form":
        value = session.form(body)
    elif kind == "polyvector":
        value = session.polyvector(body)
    elif kind in ("map", "pointmap"):
        fwd_text, bar, bwd_text = body.partition("|")
        if not bar:
            raise CommandError("maps are written FORWARD1; ...; FORWARDk | BACKWARD1; ...; BACKWARDk")
        fwd = [session.expr(t) for t in _split_list(fwd_text)]
        bwd = [session.expr(t) for t in _split_list(bwd_text)]
        need = ctx.n if kind == "pointmap" else 2 * ctx.n
        if len(fwd) != need or len(bwd) != need:
            raise CommandError(f"{kind} needs {need} forward and {need} backward images")
        value = point_transformation(fwd, bwd) if kind == "pointmap" else CoordinateMapPair(fwd, bwd)
    else:
        value = _surface_value(session, body)
    session.bindings[name] = value
    return CommandResult(f"{name} = {_show(session, value)}", {"name": name, "kind": kind,
                                                              "value": _show(session, value)})


def _surface_value(session: Session, body: str):
    ctx = session.ctx
    words = body.split(None, 1)
    if not words:
        raise CommandError("surface kinds: adjusted | graph G; CHI | equations F; PHI | G; CHI")
    if words[0] == "adjusted" and len(words) == 1:
        return AdjustedSurface(ctx)
    red = ctx.reduced(0)
    if words[0] == "graph" and len(words) == 2:
        g, chi = (session.expr(t, red) for t in _split_list(words[1]))
        return GraphSurface(ctx, g, chi)
    if words[0] == "equations" and len(words) == 2:
        eqs, bar, graph = words[1].partition("|")
        f, phi = (session.expr(t) for t in _split_list(eqs))
        G = None
        if bar:
            g, chi = (session.expr(t, red) for t in _split_list(graph))
            G = GraphSurface(ctx, g, chi)
        return EquationSurface(f, phi, G)
    raise CommandError("surface kinds: adjusted | graph G; CHI | equations F; PHI | G; CHI")


def _show(session: Session, value) -> str:
    if isinstance(value, (DifferentialForm, Polyvector)):
        return session.show_form(value)
    if isinstance(value, VolumeForm):
        return str(Semidensity(value.rho, 1, value.chart))
    if isinstance(value, CoordinateMapPair):
        src = value.source
        return "; ".join(f"~{src.coordinate_name(A)} = {z}" for A, z in enumerate(value.forward))
    if isinstance(value, AdjustedSurface):
        return f"{value.ctx.even_names[0]} = {value.ctx.odd_names[0]} = 0"
    if isinstance(value, GraphSurface):
        return f"{value.ambient.even_names[0]} = {value.g}, {value.ambient.odd_names[0]} = {value.chi}"
    if isinstance(value, EquationSurface):
        return f"{value.f} = 0, {value.phi} = 0"
    return str(value)


def _arity(args, k, usage):
    if len(args) != k:
        raise CommandError(f"usage: {usage}")


def _value(session, value, verb) -> CommandResult:
    text = _show(session, value)
    return CommandResult(text, {"command": verb, "result": text})


def _example2(session: Session, args) -> CommandResult:
    """Reproduce the surface example ``x0 = th0 = 0`` in ``E^(3.3)`` for several random ``b_i``."""
    seeds = [int(a) for a in args] or [0, 1, 2, 3, 4]
    ctx = VarContext.named(3, 0, start=0)
    form_ctx = VarContext(3, 0, ctx.even_names, ("dx0", "dx1", "dx2"), ())
    M = AdjustedSurface(ctx)
    red = M.reduced
    lines = []
    ok = True
    computed = {}
    for seed in seeds:
        rng = random.Random(f"example2:{seed}")
        b = [SuperFunction(ctx, {0: random_polynomial(rng, ctx, 2, 3)}) for _ in range(3)]
        w_terms = {(0, 1, 2): ctx.const(-1), (0,): b[0], (1,): b[1], (2,): b[2]}
        w = DifferentialForm(ctx, w_terms)
        s = tau_sharp(w)
        a, ad = A_adjusted(s, M), A_adjusted(delta_sharp(s), M)
        P0, P1 = P0_P1(s, M)
        computed = {
            "w": _form_in(form_ctx, w),
            "s": s.coeff,
            "A(s)": a.coeff,
            "A(Delta# s)": ad.coeff,
            "P0": P0.coeff,
            "P1": P1.coeff.scale(EXAMPLE2_P1_SIGN),
        }
        amb_bind = {f"b{i}": b[i] for i in range(3)}
        red_bind = {}
        for i in range(3):
            red_bind[f"b{i}"] = restrict_to(b[i], M)
            for j in range(3):
                red_bind[f"d{j}b{i}"] = restrict_to(derivative(b[i], j), M)
        for key, golden in EXAMPLE2_GOLDEN.items():
            if key == "w":
                want = parse_expression(golden, form_ctx, {k: _retag(v, form_ctx) for k, v in amb_bind.items()})
            elif key == "s":
                want = parse_expression(golden, ctx, amb_bind)
            else:
                want = parse_expression(golden, red, red_bind)
            if computed[key] != want:
                ok = False
                lines.append(f"MISMATCH seed={seed} {key}: got {computed[key]}, expected {golden}")
    data = {"command": "example2", "seeds": seeds, "pass": ok,
            "quantities": {k: {"expected": v, "matches": ok} for k, v in EXAMPLE2_GOLDEN.items()},
            "p1_convention": "printed P1 = -A(s)*A(Delta# s)"}
    head = [f"{k}: {v}" for k, v in EXAMPLE2_GOLDEN.items()]
    head.append("P1 convention: printed P1 = -A(s)*A(Delta# s)")
    verdict = f"{'PASS' if ok else 'FAIL'} ({len(EXAMPLE2_GOLDEN)} quantities, {len(seeds)} seeds)"
    return CommandResult("\n".join(head + lines + [verdict]), data, ok)


def _retag(f: SuperFunction, ctx: VarContext) -> SuperFunction:
    return SuperFunction(ctx, dict(f.terms))


def _form_in(form_ctx: VarContext, w: DifferentialForm) -> SuperFunction:
    out = form_ctx.zero
    for I, c in w.terms.items():
        out = out + _retag(c, form_ctx) * form_ctx.monomial(*I)
    return out


def _verify(session: Session, args) -> CommandResult:
    cfg = SuiteConfig(n=session.verify_n, m=session.m, seed=session.seed, trials=session.trials,
                      max_even_degree=session.max_even_degree, max_odd_degree=session.max_odd_degree,
                      timing=session.timing)
    ids = list(args) or None
    unknown = [i for i in ids or [] if i not in IDENTITIES]
    if unknown:
        raise CommandError(f"unknown identity id(s): {', '.join(unknown)}")
    records = verify_suite(cfg, ids)
    report = report_json(records)
    ok = all(r.failures == 0 for r in records)
    lines = [f"{r.id}: {r.failures}/{r.trials} failures" + (f"  first: {r.counterexample}" if r.counterexample else "")
             for r in records]
    lines.append("PASS" if ok else "FAIL")
    return CommandResult("\n".join(lines), report, ok)


def run_command(session: Session, line: str) -> CommandResult | None:
    """Execute one command line; blank lines and ``#`` comments return None."""
    line = line.strip()
    if not line or line.startswith("#"):
        return None
    verb, _, rest = line.partition(" ")
    rest = rest.strip()
    if verb in ("define", "redefine"):
        res = _define(session, rest, verb == "redefine")
        session.history.append(line)
        return res
    try:
        args = shlex.split(rest)
    except ValueError as exc:
        raise CommandError(str(exc)) from exc
    s = session
    if verb == "context":
        if len(args) not in (2, 3):
            raise CommandError("usage: context N M [zero|one]")
        s.set_context(int(args[0]), int(args[1]), len(args) == 3 and args[2] == "zero")
        s.history.clear()
        return CommandResult(f"context n={s.n} m={s.m}", {"command": "context", "n": s.n, "m": s.m})
    if verb == "show":
        _arity(args, 1, "show NAME")
        if args[0] not in s.bindings:
            raise CommandError(f"unbound name {args[0]!r}")
        return _value(s, s.bindings[args[0]], verb)
    if verb == "bracket":
        _arity(args, 2, "bracket F G")
        return _value(s, buttin(s.expr(args[0]), s.expr(args[1])), verb)
    if verb == "delta0":
        _arity(args, 1, "delta0 F")
        return _value(s, delta0(s.expr(args[0])), verb)
    if verb == "deltav":
        _arity(args, 2, "deltav F VOLUME")
        return _value(s, delta_v(s.expr(args[0]), s.volume(args[1])), verb)
    if verb == "deltasharp":
        _arity(args, 1, "deltasharp S")
        return _value(s, delta_sharp(s.density(args[0])), verb)
    if verb == "deltaq":
        _arity(args, 2, "deltaq S Q")
        return _value(s, delta_Q(s.density(args[0]), s.expr(args[1])), verb)
    if verb == "tau":
        _arity(args, 1, "tau POLYVECTOR")
        return _value(s, tau(s.polyvector(args[0])), verb)
    if verb == "tausharp":
        _arity(args, 1, "tausharp FORM  (or a bound density, for the inverse)")
        b = s.bindings.get(args[0])
        if isinstance(b, Semidensity):
            return _value(s, tau_sharp_inverse(b), verb)
        return _value(s, tau_sharp(s.form(args[0])), verb)
    if verb == "d":
        _arity(args, 1, "d FORM")
        return _value(s, exterior_d(s.form(args[0])), verb)
    if verb == "berezinian":
        _arity(args, 1, "berezinian MAP")
        return _value(s, s.chart_map(args[0]).berezinian(), verb)
    if verb == "integral":
        _arity(args, 1, "integral F")
        return _value(s, berezin_integral(s.expr(args[0])), verb)
    if verb == "transform":
        _arity(args, 2, "transform S MAP")
        return _value(s, transform_density(s.density(args[0]), s.chart_map(args[1])), verb)
    if verb == "darboux-check":
        _arity(args, 1, "darboux-check MAP")
        ok, bad = verify_darboux(s.chart_map(args[0]))
        text = "PASS" if ok else "FAIL " + ", ".join(f"{{{a},{b}}} = {v}" for a, b, v in bad)
        return CommandResult(text, {"command": verb, "pass": ok, "defects": [list(t) for t in bad]}, ok)
    if verb == "diagnostics":
        _arity(args, 1, "diagnostics S")
        d = diagnostics(s.density(args[0]))
        data = d.as_json()
        return CommandResult(json.dumps(data, sort_keys=True), {"command": verb, **data})
    if verb == "surface-A":
        _arity(args, 2, "surface-A S SURFACE")
        M = s.surface(args[1])
        if not isinstance(M, AdjustedSurface):
            raise CommandError("surface-A needs an adjusted surface; use dual-A for graphs and equations")
        return _value(s, A_adjusted(s.density(args[0]), M), verb)
    if verb == "dual-A":
        _arity(args, 2, "dual-A SURFACE VOLUME")
        M = s.surface(args[0])
        if isinstance(M, GraphSurface):
            M = EquationSurface(*M.equations(), graph=M)
        if not isinstance(M, EquationSurface):
            raise CommandError("dual-A needs a graph or equation surface")
        return _value(s, dual_A(M, s.volume(args[1])), verb)
    if verb == "p0p1":
        _arity(args, 2, "p0p1 S SURFACE")
        M = s.surface(args[1])
        if not isinstance(M, AdjustedSurface):
            raise CommandError("p0p1 needs an adjusted surface")
        P0, P1 = P0_P1(s.density(args[0]), M)
        text = f"P0 = {P0}\nP1 = {P1}"
        return CommandResult(text, {"command": verb, "P0": str(P0), "P1": str(P1)})
    if verb == "example2":
        return _example2(s, args)
    if verb == "verify":
        return _verify(s, args)
    raise CommandError(f"unknown command {verb!r}")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oddsymp", description="Exact computations on odd symplectic superspaces.")
    ap.add_argument("--n", type=int, default=None, help="number of even coordinates (default 3)")
    ap.add_argument("--m", type=int, default=0, help="number of auxiliary odd constants p1..pm")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--max-even-degree", type=int, default=2)
    ap.add_argument("--max-odd-degree", type=int, default=3)
    ap.add_argument("--json", action="store_true", help="print JSON instead of text")
    ap.add_argument("--script", metavar="FILE", help="replay a session script")
    ap.add_argument("--zero-based", action="store_true", help="name coordinates x0.. and th0..")
    ap.add_argument("--timing", action="store_true", help="record wall time in verify reports")
    ap.add_argument("command", nargs=argparse.REMAINDER, help="verb and arguments")
    return ap


def _emit(res: CommandResult, as_json: bool, out):
    if as_json:
        out.write(json.dumps(res.data, sort_keys=True) + "\n")
    else:
        out.write(res.text + "\n")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        session = Session(n=args.n or 3, m=args.m, zero_based=args.zero_based, seed=args.seed,
                          trials=args.trials, max_even_degree=args.max_even_degree,
                          max_odd_degree=args.max_odd_degree, timing=args.timing, verify_n=args.n)
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR
    if args.script:
        try:
            with open(args.script, encoding="utf-8") as fh:
                lines = fh.read().splitlines()
        except OSError as exc:
            sys.stderr.write(f"error: {exc}\n")
            return EXIT_ERROR
    elif args.command:
        verb, *rest = args.command
        if verb in ("define", "redefine"):
            lines = [" ".join(args.command)]
        else:
            lines = [" ".join([verb] + [shlex.quote(a) for a in rest])]
    else:
        lines = sys.stdin.read().splitlines()
    status = EXIT_OK
    for lineno, line in enumerate(lines, 1):
        try:
            res = run_command(session, line)
        except ParseError as exc:
            sys.stderr.write(f"error (command {lineno}): {exc}\n")
            return EXIT_ERROR
        except (CommandError, GrassmannError, ValueError, KeyError) as exc:
            sys.stderr.write(f"error (command {lineno}): {exc}\n")
            return EXIT_ERROR
        if res is None:
            continue
        _emit(res, args.json, sys.stdout)
        if not res.ok:
            status = EXIT_FAIL
    return status


if __name__ == "__main__":
    sys.exit(main())
