"""Acceptance criteria 1-8, each printing one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the lines show even under output capture.
"""
from __future__ import annotations

import contextlib
import io
import itertools

import numpy as np
import pytest

from exactode import expr as ex
from exactode.algebra import simplify
from exactode.calculus import differentiate
from exactode.cli import ProblemFile, cmd_check, cmd_mu, cmd_verify_mu, main
from exactode.exactness import FirstIntegral, build_first_integral, check_exact, reduce
from exactode.expr import Point3, evaluate, to_text
from exactode.fixtures import (AIRY, FREE, HARMONIC, IVP, IVP_ORIGIN, JET, MIXED, MIXED_MU, MIXED_PSI,
                               MIXED_PSI_FULL_LN, ODD_G, ODD_G_MU)
from exactode.intfactor import obstruction, verify_mu
from exactode.parser import parse
from exactode.verify import check_constancy, cross_check_reduction, fd_partial, integrate_ode
from exactode.zero import Verdict, relative_spread

import gen


@pytest.fixture
def verdict(capsys):
    def emit(number: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\nacceptance {number}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, detail
    return emit


def _same(a: ex.Expression, b: ex.Expression) -> bool:
    return simplify(a) == simplify(b)


def test_criterion_1_jet(verdict):
    code, report = cmd_check(ProblemFile(a2="3*eps", a1="y", a0="0", params={"eps": 1.0}))
    residuals = report["exactness"]["residuals"]
    proven = code == 0 and [r["verdict"] for r in residuals] == ["proven-zero"] * 3
    fi = reduce(JET, None, (0, 0, 0)).first_integral
    psi = ex.substitute(fi.psi, {"eps": ex.ONE})
    shape = _same(psi, parse("y^2/2 + 3*p"))
    drift = check_constancy(fi, integrate_ode(JET, (0, 1, 0), 2.0, 1024)).max_drift
    verdict(1, proven and shape and drift <= 1e-6, f"psi = {fi}, max_drift = {drift:.2e}")


def test_criterion_2_ivp(verdict):
    red = reduce(IVP, IVP_ORIGIN, IVP_ORIGIN)
    psi_ok = red.first_integral.closed_form and _same(red.first_integral.psi, parse("p + (3*y^4 - 1)*x"))
    explicit_ok = red.explicit is not None and _same(red.explicit, parse("x - 3*x*y^4"))
    gap = cross_check_reduction(IVP, red, IVP_ORIGIN, 0.5, 1024)
    ok = psi_ok and red.c == 0.0 and explicit_ok and gap <= 1e-5
    verdict(2, ok, f"{red.explicit_text()}, c = {red.c}, discrepancy = {gap:.2e}")


def test_criterion_3_odd_g(verdict):
    prob = ProblemFile(a2="(1 + y^2)*y", a1="y", a0="(1 + y^2)*y")
    code, report = cmd_mu(prob)
    hit = report["found"][0] if report["found"] else {}
    mu_hat = parse(hit["mu"]) if hit else ex.ONE
    ys = np.linspace(0.2, 2.0, 50)
    ratios = [evaluate(mu_hat, Point3(0.3, y, 0.7)) / evaluate(parse(ODD_G_MU), Point3(0.3, y, 0.7)) for y in ys]
    cv = relative_spread(ratios)
    ok = code == 0 and hit.get("form") == "OfY" and hit["scaled_exactness"]["verdict"] == "exact" and cv <= 1e-8
    verdict(3, ok, f"mu = {hit.get('mu')}, cv = {cv:.1e}")


def test_criterion_4_mixed(verdict):
    prob = ProblemFile(a2="x*y*(2*x + y)", a1="x^2 + x*y", a0="3*x*y + y^2", mu=MIXED_MU, ivp=(1.0, 1.0, 0.0),
                       base=(1.0, 1.0, 0.0), x_end=2.0)
    code, report = cmd_verify_mu(prob)
    exact = code == 0 and report["mu"]["scaled_exactness"]["verdict"] == "exact"
    tr = integrate_ode(MIXED, (1, 1, 0), 2.0, 1024)
    derived = check_constancy(FirstIntegral.from_expression(parse(MIXED_PSI)), tr).max_drift
    full_ln = check_constancy(FirstIntegral.from_expression(parse(MIXED_PSI_FULL_LN)), tr).max_drift
    ok = exact and derived <= 1e-6 and full_ln > 1e-2
    verdict(4, ok, f"derived drift = {derived:.2e}, full ln(y) variant drift = {full_ln:.3f}")


def test_criterion_5_obstruction(verdict):
    obs = obstruction(AIRY)
    shape = simplify(obs.expression) == ex.X and obs.verdict.kind is Verdict.NONZERO
    out = io.StringIO()
    with contextlib.redirect_stdout(out):
        code = main(["check", "--a2", "1", "--a1", "0", "--a0", "x*y"])
    message = "no integrating factor of the covered forms" in out.getvalue()
    with_factor = [(JET, "1"), (IVP, "1"), (FREE, "1"), (MIXED, MIXED_MU), (ODD_G, ODD_G_MU)]
    vanish = all(verify_mu(ode, parse(mu)).is_exact and obstruction(ode).verdict.is_zero for ode, mu in with_factor)
    airy_code, _ = cmd_check(ProblemFile(a2="1", a0="x*y"))
    ok = shape and code == 1 and airy_code == 1 and message and vanish
    verdict(5, ok, f"E = {to_text(obs.expression)}, exit code {code}, fixtures with a factor have E = 0: {vanish}")


def test_criterion_6_round_trip(verdict):
    rng = np.random.default_rng(6)
    failures = 0
    for _ in range(200):
        psi_hat = gen.random_potential(rng, degree=4)
        ode = gen.exact_from(psi_hat)
        report = check_exact(ode)
        if not all(v.kind is Verdict.PROVEN_ZERO for v in report.verdicts):
            failures += 1
            continue
        fi = build_first_integral(ode, (0, 0, 0))
        shift = evaluate(psi_hat, Point3(0, 0, 0))
        pts = [gen.random_point(rng) for _ in range(50)]
        if max(abs(fi(pt) - (evaluate(psi_hat, pt) - shift)) for pt in pts) > 1e-9:
            failures += 1
    verdict(6, failures == 0, f"{failures} failures out of 200")


def test_criterion_7_mu_recovery(verdict):
    rng = np.random.default_rng(7)
    finders = gen.mu_finders()
    failures = []
    for _, mu_text in zip(range(100), itertools.cycle(finders)):
        mu_star = parse(mu_text)
        ode = gen.exact_from(gen.random_potential(rng, degree=3)).scaled(ex.div(ex.ONE, mu_star))
        result = finders[mu_text](ode)
        if not (result and result.is_exact and gen.ratio_spread(result, mu_star, rng) <= 1e-8):
            failures.append(mu_text)
    verdict(7, not failures, f"{len(failures)} failures out of 100 {sorted(set(failures))}")


def test_criterion_8_integrator(verdict):
    def sine_error(steps: int) -> float:
        tr = integrate_ode(HARMONIC, (0, 0, 1), 4.0, steps)
        return float(np.max(np.abs(tr.y - np.sin(tr.x))))

    ratio = sine_error(64) / sine_error(128)
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(500):
        e = gen.random_expr(rng)
        v = gen.VARS[rng.integers(3)]
        pt = gen.random_point(rng)
        d = evaluate(differentiate(e, v), pt)
        worst = max(worst, abs(d - fd_partial(e, v, pt)) / (1 + abs(d)))
    verdict(8, 12 <= ratio <= 20 and worst <= 1e-5, f"order ratio = {ratio:.2f}, worst fd gap = {worst:.1e}")
