import json
import random

import pytest

from oddsymp.cli import CommandError, Session, main, run_command
from oddsymp.grassmann import VarContext, derivative
from oddsymp.parser import ParseError, format_superfunction, parse_expression
from oddsymp.surfaces import EquationSurface, dual_A
from oddsymp.symplectic import VolumeForm, buttin
from oddsymp.verify import IDENTITIES, SuiteConfig, report_json, verify_suite


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_bracket_command(capsys):
    code, out, _ = run(capsys, "bracket", "x1", "th1")
    assert code == 0 and out.strip() == "1"


def test_example2_command(capsys):
    code, out, _ = run(capsys, "example2")
    assert code == 0
    assert out.strip().splitlines()[-1].startswith("PASS (6 quantities")
    code, out, _ = run(capsys, "--json", "example2")
    data = json.loads(out)
    assert data["pass"] is True and len(data["quantities"]) == 6


def test_diagnostics_command(capsys):
    code, out, _ = run(capsys, "--n", "3", "diagnostics", "1 + 9*th1*th2*th3")
    assert code == 0
    data = json.loads(out)
    assert data["nu"] == 0 and data["c"] == 9 and data["master_equation"] is True


def test_error_exit_codes(capsys):
    code, _, err = run(capsys, "bracket", "x1", "1/th1")
    assert code == 2 and "odd" in err
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "bracket", "x1")[0] == 2
    assert run(capsys, "bracket", "x1", "y7")[0] == 2


def test_check_failure_exit_code(capsys, tmp_path):
    script = tmp_path / "s.txt"
    script.write_text("define map F = x1; 2*th1 | x1; 1/2*th1\ndarboux-check F\n", encoding="utf-8")
    code, out, _ = run(capsys, "--n", "1", "--script", str(script))
    assert code == 1 and "FAIL" in out


def test_session_script_replays(capsys, tmp_path):
    s = Session(n=2, m=1)
    lines = [
        "define f = x1*th1 + p1",
        "define volume dv = 1 + 2*p1*th1",
        "define density s = 1 + x1*th1*th2",
        "define form w = x1*dx1 + x2*dx1*dx2",
        "define surface M = adjusted",
    ]
    outs = [run_command(s, ln).text for ln in lines]
    outs += [run_command(s, c).text for c in ("deltav x1 dv", "tausharp w", "d w", "surface-A s M", "p0p1 s M")]
    assert outs[5] == "-p1"
    script = tmp_path / "session.txt"
    script.write_text(s.to_script() + "deltav x1 dv\ntausharp w\nd w\nsurface-A s M\np0p1 s M\n", encoding="utf-8")
    code, out, _ = run(capsys, "--script", str(script))
    assert code == 0
    assert out.splitlines() == ["context n=2 m=1"] + "\n".join(outs).splitlines()


def test_rebinding_is_explicit():
    s = Session(n=2)
    run_command(s, "define f = x1")
    with pytest.raises(CommandError):
        run_command(s, "define f = x2")
    run_command(s, "redefine f = x2")
    assert run_command(s, "show f").text == "x2"
    with pytest.raises(CommandError):
        run_command(s, "define x1 = 3")


def test_zero_based_names(capsys):
    code, out, _ = run(capsys, "--zero-based", "--n", "2", "bracket", "x0", "th0")
    assert code == 0 and out.strip() == "1"


def test_forms_and_maps_in_session():
    s = Session(n=2)
    assert run_command(s, "tausharp x1*dx1").text == "(x1*th2)|dz|^1/2"
    assert run_command(s, "tau x1*delx2").text == "x1*th2"
    run_command(s, "define pointmap F = x1; x2 + x1^2 | x1; x2 - x1^2")
    assert run_command(s, "darboux-check F").ok
    assert run_command(s, "berezinian F").text == "1"
    assert run_command(s, "transform x2 F").text == "(-x1^2 + x2)|dw|^1/2"
    run_command(s, "define surface G = graph x2^2; 0")
    assert run_command(s, "dual-A G 1").text == "0"
    ctx = s.ctx
    G = s.bindings["G"]
    want = dual_A(EquationSurface(*G.equations(), graph=G), VolumeForm(parse_expression("1 + x1*th1*th2", ctx)))
    assert run_command(s, 'dual-A G "1 + x1*th1*th2"').text == str(want)


def test_verify_command(capsys):
    code, out, _ = run(capsys, "--n", "2", "--trials", "100", "--seed", "42", "--json", "verify", "jacobi")
    data = json.loads(out)
    assert code == 0
    assert data["suite"][0] == {"id": "jacobi", "trials": 100, "failures": 0, "seed": 42,
                                "counterexample": None, "ms": 0}


def test_report_byte_identical(capsys):
    a = run(capsys, "--trials", "5", "--seed", "3", "--json", "verify")[1]
    b = run(capsys, "--trials", "5", "--seed", "3", "--json", "verify")[1]
    assert a == b
    assert {r["id"] for r in json.loads(a)["suite"]} == set(IDENTITIES)


def test_corrupted_bracket_is_caught():
    def bad(f, g):
        # flips the parity sign of the second term
        out = f.ctx.zero
        for p, fp in f.homogeneous_parts():
            for i in range(f.ctx.n):
                t = derivative(fp, f.ctx.n + i) * derivative(g, i)
                out = out + derivative(fp, i) * derivative(g, f.ctx.n + i) + (-t if p == 0 else t)
        return out

    recs = verify_suite(SuiteConfig(n=2, trials=30, seed=1), ["jacobi", "antisymmetry"], {"buttin": bad})
    assert all(r.failures > 0 and r.counterexample for r in recs)


def test_unknown_identity_and_trials():
    with pytest.raises(KeyError):
        verify_suite(SuiteConfig(trials=1), ["nope"])
    with pytest.raises(ValueError):
        verify_suite(SuiteConfig(trials=0))
    assert report_json(verify_suite(SuiteConfig(trials=1, seed=0), ["delta0-nilpotent"]))["suite"][0]["failures"] == 0


# --- random expression text --------------------------------------------------

def random_expression(rng, ctx, depth=3):
    names = list(ctx.even_names + ctx.odd_names + ctx.aux_names)
    if depth == 0 or rng.random() < 0.3:
        r = rng.random()
        if r < 0.5:
            return rng.choice(names)
        if r < 0.75:
            return str(rng.randint(0, 9))
        return f"{rng.randint(1, 9)}/{rng.randint(1, 9)}"
    op = rng.choice(["+", "-", "*", "*", "^", "/", "neg", "paren"])
    a = random_expression(rng, ctx, depth - 1)
    if op == "^":
        return f"({a})^{rng.randint(0, 3)}"
    if op == "/":
        den = f"{rng.randint(1, 5)} + {rng.choice(ctx.even_names)}^2"
        return f"({a})/({den})"
    if op == "neg":
        return f"-({a})"
    if op == "paren":
        return f"({a})"
    b = random_expression(rng, ctx, depth - 1)
    return f"{a} {op} {b}"


def test_parser_round_trip_500():
    rng = random.Random(2024)
    count = 0
    for k in range(500):
        ctx = VarContext.named(rng.choice([1, 2, 3]), rng.choice([0, 1]))
        text = random_expression(rng, ctx)
        v = parse_expression(text, ctx)
        printed = format_superfunction(v)
        again = parse_expression(printed, ctx)
        assert again == v, text
        assert format_superfunction(again) == printed
        count += 1
    assert count == 500
