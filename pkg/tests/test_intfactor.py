from __future__ import annotations

import numpy as np
import pytest

from exactode import expr as ex
from exactode.algebra import equal
from exactode.calculus import differentiate
from exactode.exactness import Exactness, SecondOrderOde, check_exact
from exactode.fixtures import AIRY, FREE, IVP, JET, MIXED, MIXED_MU, ODD_G, ODD_G_MU
from exactode.intfactor import (FactorSpecError, MuForm, MuMiss, ProductFactorSpec, RatioUndefined,
                                find_mu_pairwise, find_mu_p, find_mu_product, find_mu_x, find_mu_y,
                                lemma_ratios, monomial_order, obstruction, obstruction_expression,
                                search_mu_monomial, verify_mu)
from exactode.parser import parse
from exactode.verify import fd_partial
from exactode.zero import Verdict

import gen


def _constant_ratio(result, mu_star: str, seed: int = 0) -> float:
    return gen.ratio_spread(result, parse(mu_star), np.random.default_rng(seed))


# -- obstruction -----------------------------------------------------------------------------------

def test_airy_obstruction():
    assert equal(obstruction_expression(AIRY), ex.X)
    obs = obstruction(AIRY)
    assert obs.verdict.kind is Verdict.NONZERO and obs.rules_out
    assert "no integrating factor of the covered forms" in obs.message


@pytest.mark.parametrize("ode", [JET, IVP, FREE, MIXED, ODD_G], ids=["jet", "ivp", "free", "mixed", "odd_g"])
def test_obstruction_vanishes_when_factor_exists(ode):
    assert obstruction(ode).verdict.is_zero


def test_obstruction_is_mu_invariant():
    # E picks up a factor mu^2 under scaling, so its zero set is unchanged
    scaled = MIXED.scaled(parse(MIXED_MU))
    assert obstruction(scaled).verdict.is_zero
    assert not obstruction(AIRY.scaled(parse("exp(x*y)"))).verdict.is_zero


# -- single-variable lemmas ------------------------------------------------------------------------

def test_mu_x_ratio_mismatch():
    miss = find_mu_x(SecondOrderOde.parse("1", "1", "y + x"))
    assert isinstance(miss, MuMiss)
    assert "ratio" in miss.hypothesis


@pytest.mark.parametrize("finder", [find_mu_x, find_mu_y, find_mu_p])
def test_exact_ode_gives_unit_factor(finder):
    result = finder(IVP)
    assert result and result.is_exact
    assert _constant_ratio(result, "1") <= 1e-12


def test_odd_g_factor():
    result = find_mu_y(ODD_G)
    assert result.form is MuForm.OF_Y
    assert result.report.verdict is Exactness.EXACT
    assert _constant_ratio(result, ODD_G_MU) <= 1e-8
    scaled = ODD_G.scaled(result.mu)
    assert check_exact(scaled).is_exact


def test_odd_g_other_lemmas_miss():
    assert isinstance(find_mu_x(ODD_G), MuMiss)
    assert isinstance(find_mu_p(ODD_G), MuMiss)


def test_mu_p_side_condition_named():
    miss = find_mu_p(SecondOrderOde.parse("1", "x", "x"))
    assert isinstance(miss, MuMiss)
    assert "d(a1)/dx" in miss.hypothesis


def test_ratio_undefined():
    with pytest.raises(RatioUndefined):
        lemma_ratios(SecondOrderOde.parse("1", "0", "y"), "x")
    with pytest.raises(RatioUndefined, match="a0"):
        find_mu_y(JET)


@pytest.mark.parametrize("mu_star, finder, form", [
    ("x^2", find_mu_x, MuForm.OF_X), ("exp(x)", find_mu_x, MuForm.OF_X),
    ("y", find_mu_y, MuForm.OF_Y), ("p", find_mu_p, MuForm.OF_P), ("1 + p^2", find_mu_p, MuForm.OF_P),
])
def test_single_variable_recovery(mu_star, finder, form):
    base = gen.exact_from(parse("p*y + x^2*y + x + y^3"))
    ode = base.scaled(ex.div(ex.ONE, parse(mu_star)))
    result = finder(ode)
    assert result and result.form is form and result.is_exact
    assert _constant_ratio(result, mu_star) <= 1e-8


@pytest.mark.parametrize("finder, own", [(find_mu_x, "x"), (find_mu_y, "y"), (find_mu_p, "p")])
def test_form_consistency(finder, own):
    base = gen.exact_from(parse("p*y + x^2*y + x + y^3"))
    ode = base.scaled(ex.div(ex.ONE, ex.add(ex.ONE, ex.power(ex.Var(own), ex.const(2)))))
    result = finder(ode)
    assert result.mu is not None
    for v in ex.VARIABLES:
        if v != own:
            assert differentiate(result.mu, v) == ex.ZERO


def test_scaled_equation_checked_by_finite_differences():
    result = find_mu_y(ODD_G)
    a2, a1, a0 = result.scaled.coefficients
    rng = np.random.default_rng(4)
    for _ in range(20):
        pt = gen.random_point(rng, 0.2, 1.8)
        assert fd_partial(a2, "y", pt) == pytest.approx(fd_partial(a1, "p", pt), abs=1e-6)
        assert fd_partial(a2, "x", pt) == pytest.approx(fd_partial(a0, "p", pt), abs=1e-6)
        assert fd_partial(a1, "x", pt) == pytest.approx(fd_partial(a0, "y", pt), abs=1e-6)


# -- product forms ---------------------------------------------------------------------------------

def test_spec_must_be_univariate():
    with pytest.raises(FactorSpecError):
        ProductFactorSpec(alpha=parse("x*y"))


def test_product_reduces_to_alpha_lemma():
    ode = gen.exact_from(parse("p*y + x^2*y + x + y^3")).scaled(parse("1/x"))
    result = find_mu_product(ode, ProductFactorSpec(alpha=ex.X))
    assert result and result.is_exact
    assert _constant_ratio(result, "x") <= 1e-8


def test_pairwise_xy_recovery():
    ode = IVP.scaled(parse("1/(x*y)"))
    result = find_mu_pairwise(ode, ProductFactorSpec(ex.X, ex.Y))
    assert result and result.is_exact
    assert _constant_ratio(result, "x*y") <= 1e-8


def test_pairwise_needs_one_trivial_factor():
    with pytest.raises(FactorSpecError):
        find_mu_pairwise(IVP, ProductFactorSpec(ex.X, ex.Y, ex.P))


def test_pairwise_exact_gives_unit():
    result = find_mu_pairwise(IVP, ProductFactorSpec(ex.X, ex.Y))
    assert result and _constant_ratio(result, "1") <= 1e-8


def test_mixed_product_forms_miss():
    assert isinstance(find_mu_pairwise(MIXED, ProductFactorSpec(ex.X, ex.Y)), MuMiss)
    assert isinstance(find_mu_product(MIXED, ProductFactorSpec(ex.ONE, ex.Y, ex.P)), MuMiss)


def test_composite_xi_recovery():
    # mu = (x*p)^2 is a function of xi = x*p but of no single variable
    base = gen.exact_from(parse("p + x*y + y^2"))
    ode = base.scaled(parse("1/(x*p)^2"))
    result = find_mu_pairwise(ode, ProductFactorSpec(alpha=ex.X, gamma=ex.P))
    assert result and result.is_exact
    assert _constant_ratio(result, "(x*p)^2") <= 1e-8


# -- monomial search -------------------------------------------------------------------------------

def test_monomial_order_starts_at_unit():
    order = monomial_order(2)
    assert order[0] == (0, 0, 0) and len(order) == 125
    assert order[1:7] == sorted(order[1:7])


def test_monomial_recovery():
    result = search_mu_monomial(IVP.scaled(parse("x^2*y")))
    assert result.exponents == (-2, -1, 0)


def test_monomial_on_exact():
    assert search_mu_monomial(IVP).exponents == (0, 0, 0)


def test_monomial_mixed_exhausts():
    miss = search_mu_monomial(MIXED)
    assert isinstance(miss, MuMiss)


# -- verify_mu -------------------------------------------------------------------------------------

def test_verify_mixed():
    result = verify_mu(MIXED, parse(MIXED_MU))
    assert result.form is MuForm.USER
    assert result.report.verdict is Exactness.EXACT


def test_verify_unit_factor():
    assert verify_mu(IVP, ex.ONE).is_exact
    report = verify_mu(MIXED, ex.ONE).report
    assert report.verdict is Exactness.NOT_EXACT
    assert report.verdicts[report.failures[0]].witness is not None


def test_verify_zero_factor():
    with pytest.raises(ValueError):
        verify_mu(IVP, parse("x - x"))


def test_sign_change_warns():
    result = verify_mu(FREE, parse("p"))
    assert result.is_exact
    assert result.warnings


# -- mu-recovery over random exact equations -------------------------------------------------------

@pytest.mark.parametrize("mu_star", list(gen.mu_finders()))
def test_random_recovery(mu_star):
    rng = np.random.default_rng(hash(mu_star) % 2**32)
    finder = gen.mu_finders()[mu_star]
    for _ in range(3):
        ode = gen.exact_from(gen.random_potential(rng, degree=3)).scaled(ex.div(ex.ONE, parse(mu_star)))
        result = finder(ode)
        assert result and result.is_exact, getattr(result, "hypothesis", None)
        assert gen.ratio_spread(result, parse(mu_star), rng) <= 1e-8
