"""Integrating factors: the obstruction test, single-variable and product-form finders.

Writing mu = mu(xi) for a composite argument xi(x, y, p), the exactness
conditions of the scaled equation become ``R * D_k = N_k`` with R = mu'/mu:

    D1 = a2*xi_y - a1*xi_p      N1 = d(a1)/dp - d(a2)/dy
    D2 = a2*xi_x - a0*xi_p      N2 = d(a0)/dp - d(a2)/dx
    D3 = a1*xi_x - a0*xi_y      N3 = d(a0)/dy - d(a1)/dx

Where D_k vanishes identically, N_k must vanish too; the remaining ratios
N_k/D_k must agree and be a function of xi alone.  Taking xi to be a single
variable gives the single-variable lemmas; xi = alpha*beta*gamma gives the
product form and its two-factor special cases.
"""

from __future__ import annotations

import enum
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from . import expr as ex
from .algebra import simplify
from .calculus import differentiate
from .exactness import (ExactnessReport, FirstIntegral, SecondOrderOde, SingularLegError, check_exact,
                        potential, report_for)
from .expr import EvaluationError, Expression, Point3, compile_expr, evaluate
from .zero import (DegenerateBoxError, Dependence, DependenceVerdict, Sampler, SamplerConfig, ZeroVerdict,
                   auto_box, depends_only_on, is_identically_zero)

log = logging.getLogger(__name__)

ANCHORS = (1.0, 2.0, 0.5, -1.0, 3.0)
BISECTION_ITERATIONS = 20


class RatioUndefined(ValueError):
    """A lemma ratio divides by a coefficient that vanishes identically."""


class FactorSpecError(ValueError):
    pass


class LevelSetError(ValueError):
    """The composite argument could not be inverted on the sampling box."""


class MuForm(enum.Enum):
    OF_X = "OfX"
    OF_Y = "OfY"
    OF_P = "OfP"
    PRODUCT = "Product"
    USER = "UserSupplied"


@dataclass(frozen=True)
class Obstruction:
    expression: Expression
    verdict: ZeroVerdict

    @property
    def rules_out(self) -> bool:
        return not self.verdict.is_zero

    @property
    def message(self) -> str:
        if self.rules_out:
            return ("no integrating factor of the covered forms mu(x,y,y'), mu(x,y), mu(x,y'), "
                    "mu(y,y') exists")
        return "obstruction vanishes; an integrating factor may exist"

    def as_dict(self) -> dict:
        return {"expression": ex.to_text(self.expression), "message": self.message, **self.verdict.as_dict()}


@dataclass(frozen=True)
class ProductFactorSpec:
    """mu is sought as a function of xi = alpha(x) * beta(y) * gamma(p)."""

    alpha: Expression = ex.ONE
    beta: Expression = ex.ONE
    gamma: Expression = ex.ONE

    def __post_init__(self):
        for name, factor, own in (("alpha", self.alpha, "x"), ("beta", self.beta, "y"), ("gamma", self.gamma, "p")):
            extra = ex.variables(simplify(factor)) - {own}
            if extra:
                raise FactorSpecError(f"{name} must depend on {own} only, not on {', '.join(sorted(extra))}")

    @property
    def xi(self) -> Expression:
        return simplify(ex.mul(self.alpha, self.beta, self.gamma))

    def trivial(self) -> tuple[bool, bool, bool]:
        return tuple(simplify(f) == ex.ONE for f in (self.alpha, self.beta, self.gamma))

    def label(self) -> str:
        names = [n for n, t in zip(("alpha(x)", "beta(y)", "gamma(y')"), self.trivial()) if not t]
        return "mu(" + "*".join(names) + ")"


@dataclass(frozen=True)
class MuResult:
    form: MuForm
    source: str
    report: ExactnessReport
    mu: Expression | None = None
    evaluator: Callable[[Point3], float] | None = None
    scaled: SecondOrderOde | None = None
    spec: ProductFactorSpec | None = None
    exponents: tuple[int, int, int] | None = None
    warnings: tuple[str, ...] = ()

    def __call__(self, at: Point3) -> float:
        if self.mu is not None:
            return evaluate(self.mu, at)
        return self.evaluator(at)

    @property
    def is_exact(self) -> bool:
        return self.report.is_exact

    def as_dict(self) -> dict:
        out = {
            "form": self.form.value,
            "source": self.source,
            "mu": ex.to_text(self.mu) if self.mu is not None else None,
            "scaled_exactness": self.report.as_dict(),
            "warnings": list(self.warnings),
        }
        if self.exponents is not None:
            out["exponents"] = list(self.exponents)
        if self.spec is not None:
            out["spec"] = {k: ex.to_text(getattr(self.spec, k)) for k in ("alpha", "beta", "gamma")}
        return out


@dataclass(frozen=True)
class MuMiss:
    """A finder's negative answer, naming the first hypothesis that failed."""

    source: str
    hypothesis: str
    detail: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return False

    def as_dict(self) -> dict:
        return {"source": self.source, "failed_hypothesis": self.hypothesis, **self.detail}


# ---------------------------------------------------------------------------


def _partials(ode: SecondOrderOde) -> dict[str, Expression]:
    d = differentiate
    a2, a1, a0 = ode.coefficients
    return {
        "a2_x": d(a2, "x"), "a2_y": d(a2, "y"),
        "a1_x": d(a1, "x"), "a1_p": d(a1, "p"),
        "a0_y": d(a0, "y"), "a0_p": d(a0, "p"),
    }


def obstruction_expression(ode: SecondOrderOde) -> Expression:
    a2, a1, a0 = ode.coefficients
    d = _partials(ode)
    return simplify(ex.add(
        ex.mul(ex.sub(d["a0_y"], d["a1_x"]), a2),
        ex.mul(ex.sub(d["a2_x"], d["a0_p"]), a1),
        ex.mul(ex.sub(d["a1_p"], d["a2_y"]), a0),
    ))


def obstruction(ode: SecondOrderOde, config: SamplerConfig | None = None) -> Obstruction:
    """Nonzero result rules out every integrating factor mu(x, y, p)."""
    e = obstruction_expression(ode)
    config = config or ode.sampler_config()
    return Obstruction(e, is_identically_zero(e, config))


def _config(ode: SecondOrderOde, config: SamplerConfig | None, *extra: Expression) -> SamplerConfig:
    if config is not None:
        return config
    return SamplerConfig(box=auto_box(*ode.coefficients, *extra), params=dict(ode.params))


def _nonvanishing(mu: Expression, config: SamplerConfig) -> tuple[str, ...]:
    """Sampled check that mu has no zero on the box; a sign change only warns."""
    f = compile_expr(mu)
    signs = set()
    for pt in Sampler([mu], config).points():
        value = f(pt.x, pt.y, pt.p, pt.params)
        if abs(value) < 1e-300:
            raise ValueError(f"integrating factor vanishes at {pt}")
        signs.add(value > 0)
    if len(signs) > 1:
        msg = "integrating factor changes sign on the sampling box"
        log.warning(msg)
        return (msg,)
    return ()


def _log_gradient_report(ode: SecondOrderOde, grad: Sequence[Expression], config: SamplerConfig) -> ExactnessReport:
    """Exactness of mu*ode from grad(ln mu) alone; each residual is divided by mu."""
    gx, gy, gp = grad
    a2, a1, a0 = ode.coefficients
    d = _partials(ode)
    residuals = (
        simplify(ex.add(ex.mul(gy, a2), d["a2_y"], ex.neg(ex.mul(gp, a1)), ex.neg(d["a1_p"]))),
        simplify(ex.add(ex.mul(gx, a2), d["a2_x"], ex.neg(ex.mul(gp, a0)), ex.neg(d["a0_p"]))),
        simplify(ex.add(ex.mul(gx, a1), d["a1_x"], ex.neg(ex.mul(gy, a0)), ex.neg(d["a0_y"]))),
    )
    return report_for(residuals, config)


def _finish(ode: SecondOrderOde, form: MuForm, source: str, log_mu: FirstIntegral, grad: Sequence[Expression],
            config: SamplerConfig, **extra) -> MuResult:
    """Turn ln(mu) into a MuResult with its scaled exactness report."""
    if log_mu.psi is not None:
        mu = simplify(ex.exp(log_mu.psi))
        scaled = ode.scaled(mu)
        mu_config = config.with_(box=auto_box(*ode.coefficients, mu))
        warnings = _nonvanishing(mu, mu_config)
        report = check_exact(scaled, mu_config)
        return MuResult(form, source, report, mu=mu, scaled=scaled, warnings=warnings, **extra)
    report = _log_gradient_report(ode, grad, config)
    evaluator = lambda at: math.exp(log_mu(at))  # noqa: E731
    return MuResult(form, source, report, evaluator=evaluator, **extra)


def _anchored_potential(grad: Sequence[Expression], params) -> FirstIntegral:
    errors = []
    for a in ANCHORS:
        try:
            return potential(*grad, Point3(a, a, a, params))
        except SingularLegError as err:
            errors.append(str(err))
    raise SingularLegError("no usable anchor for the integrating factor: " + "; ".join(errors))


# ---------------------------------------------------------------------------
# single-variable lemmas

_LEMMAS = {
    # variable: (side condition (lhs, rhs), [(numerator pair, denominator)])
    "x": (("a2_y", "a1_p"), [(("a0_y", "a1_x"), 1), (("a0_p", "a2_x"), 2)]),
    "y": (("a2_x", "a0_p"), [(("a1_p", "a2_y"), 2), (("a1_x", "a0_y"), 0)]),
    "p": (("a1_x", "a0_y"), [(("a2_y", "a1_p"), 1), (("a2_x", "a0_p"), 0)]),
}
_FORMS = {"x": MuForm.OF_X, "y": MuForm.OF_Y, "p": MuForm.OF_P}
_PRETTY = {"x": "x", "y": "y", "p": "y'"}


def _pretty(name: str) -> str:
    a, v = name.split("_")
    return f"d({a})/d{_PRETTY[v]}"


def lemma_ratios(ode: SecondOrderOde, v: str) -> tuple[Expression, Expression]:
    """The two ratios whose common value is mu'/mu in the lemma for mu(v)."""
    d = _partials(ode)
    coeff = {2: ode.a2, 1: ode.a1, 0: ode.a0}
    out = []
    for (plus, minus), k in _LEMMAS[v][1]:
        if simplify(coeff[k]) == ex.ZERO:
            raise RatioUndefined(f"a{k} vanishes identically; the ratio for mu({_PRETTY[v]}) is undefined")
        out.append(simplify(ex.div(ex.sub(d[plus], d[minus]), coeff[k])))
    return tuple(out)


def _find_single(ode: SecondOrderOde, v: str, config: SamplerConfig | None) -> MuResult | MuMiss:
    source = f"lemma mu({_PRETTY[v]})"
    d = _partials(ode)
    (lhs, rhs), _ = _LEMMAS[v]
    side = is_identically_zero(ex.sub(d[lhs], d[rhs]), _config(ode, config))
    if not side.is_zero:
        return MuMiss(source, f"{_pretty(lhs)} = {_pretty(rhs)}", {"side_condition": side.as_dict()})
    first, second = lemma_ratios(ode, v)
    cfg = _config(ode, config, first, second)
    for label, ratio in (("first", first), ("second", second)):
        dep = depends_only_on(ratio, {v}, cfg)
        if not dep.independent:
            return MuMiss(source, f"{label} ratio depends only on {_PRETTY[v]}",
                          {"ratio": ex.to_text(ratio), "dependence": dep.as_dict()})
    agree = is_identically_zero(ex.sub(first, second), cfg)
    if not agree.is_zero:
        return MuMiss(source, "ratio mismatch",
                      {"ratios": [ex.to_text(first), ex.to_text(second)], "agreement": agree.as_dict()})
    grad = [ex.ZERO, ex.ZERO, ex.ZERO]
    grad[ex.VARIABLES.index(v)] = first
    log_mu = _anchored_potential(grad, ode.params)
    return _finish(ode, _FORMS[v], source, log_mu, grad, cfg)


def find_mu_x(ode: SecondOrderOde, config: SamplerConfig | None = None) -> MuResult | MuMiss:
    return _find_single(ode, "x", config)


def find_mu_y(ode: SecondOrderOde, config: SamplerConfig | None = None) -> MuResult | MuMiss:
    return _find_single(ode, "y", config)


def find_mu_p(ode: SecondOrderOde, config: SamplerConfig | None = None) -> MuResult | MuMiss:
    return _find_single(ode, "p", config)


# ---------------------------------------------------------------------------
# composite argument xi


def xi_conditions(ode: SecondOrderOde, xi: Expression) -> list[tuple[Expression, Expression]]:
    """(N_k, D_k) for k = 1, 2, 3; R = mu'(xi)/mu(xi) must satisfy R*D_k = N_k."""
    a2, a1, a0 = ode.coefficients
    d = _partials(ode)
    xx, xy, xp = (differentiate(xi, v) for v in ex.VARIABLES)
    return [
        (simplify(ex.sub(d["a1_p"], d["a2_y"])), simplify(ex.sub(ex.mul(a2, xy), ex.mul(a1, xp)))),
        (simplify(ex.sub(d["a0_p"], d["a2_x"])), simplify(ex.sub(ex.mul(a2, xx), ex.mul(a0, xp)))),
        (simplify(ex.sub(d["a0_y"], d["a1_x"])), simplify(ex.sub(ex.mul(a1, xx), ex.mul(a0, xy)))),
    ]


def _cross_zero(r: Expression, xi: Expression) -> bool:
    gr = [differentiate(r, v) for v in ex.VARIABLES]
    gx = [differentiate(xi, v) for v in ex.VARIABLES]
    cross = (
        ex.sub(ex.mul(gr[1], gx[2]), ex.mul(gr[2], gx[1])),
        ex.sub(ex.mul(gr[2], gx[0]), ex.mul(gr[0], gx[2])),
        ex.sub(ex.mul(gr[0], gx[1]), ex.mul(gr[1], gx[0])),
    )
    return all(simplify(c) == ex.ZERO for c in cross)


def _solve_on_line(f: Callable[[float], float], target: float, lo: float, hi: float, near: float) -> float | None:
    """Root of f(t) = target in [lo, hi]: bracket on a grid, bisect, then polish."""
    grid = np.linspace(lo, hi, 65)
    values = []
    for t in grid:
        try:
            values.append(f(t) - target)
        except EvaluationError:
            values.append(math.nan)
    brackets = [(grid[i], grid[i + 1]) for i in range(len(grid) - 1)
                if np.isfinite(values[i]) and np.isfinite(values[i + 1]) and values[i] * values[i + 1] <= 0]
    if not brackets:
        return None
    a, b = min(brackets, key=lambda ab: abs(0.5 * (ab[0] + ab[1]) - near))
    g = lambda t: f(t) - target  # noqa: E731
    for _ in range(BISECTION_ITERATIONS):
        m = 0.5 * (a + b)
        if g(a) * g(m) <= 0:
            b = m
        else:
            a = m
    if g(a) == 0:
        return a
    if g(a) * g(b) > 0:
        return 0.5 * (a + b)
    return optimize.brentq(g, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def depends_only_on_xi(r: Expression, xi: Expression, config: SamplerConfig) -> DependenceVerdict:
    """Is ``r`` constant on level sets of ``xi``?

    Proven when grad(r) x grad(xi) simplifies to zero; otherwise points are moved
    along a level set (one coordinate changed at random, another solved for) and the
    variation of ``r`` is measured.
    """
    used = sorted(ex.variables(xi), key=ex.VARIABLES.index)
    if len(used) == 1:
        return depends_only_on(r, set(used), config)
    keep = frozenset(used)
    if _cross_zero(r, xi):
        return DependenceVerdict(Dependence.PROVEN_INDEPENDENT, keep)
    fr, fxi = compile_expr(r), compile_expr(xi)
    sampler = Sampler([r, xi], config)
    rng = np.random.default_rng(config.seed + 1)
    worst, count = 0.0, 0
    for pt in sampler.points():
        move, solve = rng.choice(used, size=2, replace=False)
        coords = dict(x=pt.x, y=pt.y, p=pt.p)
        target = fxi(pt.x, pt.y, pt.p, pt.params)
        lo, hi = config.box[ex.VARIABLES.index(move)]
        coords[move] = rng.uniform(lo, hi)

        def along(t: float) -> float:
            c = dict(coords, **{solve: t})
            return fxi(c["x"], c["y"], c["p"], pt.params)

        slo, shi = config.box[ex.VARIABLES.index(solve)]
        root = _solve_on_line(along, target, slo, shi, coords[solve])
        if root is None:
            continue
        coords[solve] = root
        if not sampler.acceptable(coords["x"], coords["y"], coords["p"]):
            continue
        moved = Point3(coords["x"], coords["y"], coords["p"], pt.params)
        a = fr(pt.x, pt.y, pt.p, pt.params)
        b = fr(moved.x, moved.y, moved.p, moved.params)
        count += 1
        if abs(a - b) > config.tol * (1.0 + abs(a)):
            return DependenceVerdict(Dependence.DEPENDENT, keep, count, abs(a - b), (pt, moved), (a, b))
        worst = max(worst, abs(a - b))
    if count == 0:
        raise LevelSetError("could not move along any level set of xi inside the box")
    return DependenceVerdict(Dependence.SAMPLED_INDEPENDENT, keep, count, worst)


def _find_xi(ode: SecondOrderOde, spec: ProductFactorSpec, source: str,
             config: SamplerConfig | None) -> MuResult | MuMiss:
    xi = spec.xi
    if not ex.variables(xi):
        raise FactorSpecError("alpha*beta*gamma is constant; nothing to solve for")
    conditions = xi_conditions(ode, xi)
    cfg = _config(ode, config, xi, *(n for n, _ in conditions), *(d for _, d in conditions))
    ratios = []
    for k, (num, den) in enumerate(conditions, start=1):
        if den == ex.ZERO:
            side = is_identically_zero(num, cfg)
            if not side.is_zero:
                return MuMiss(source, f"side condition N{k} = 0 (its denominator vanishes)",
                              {"numerator": ex.to_text(num), "verdict": side.as_dict()})
        else:
            ratios.append(simplify(ex.div(num, den)))
    if not ratios:
        raise FactorSpecError("every ratio denominator vanishes; xi carries no information")
    cfg = cfg.with_(box=auto_box(*ode.coefficients, xi, *ratios))
    for i, j in itertools.combinations(range(len(ratios)), 2):
        agree = is_identically_zero(ex.sub(ratios[i], ratios[j]), cfg)
        if not agree.is_zero:
            return MuMiss(source, "ratios agree",
                          {"ratios": [ex.to_text(r) for r in ratios], "agreement": agree.as_dict()})
    r = ratios[0]
    dep = depends_only_on_xi(r, xi, cfg)
    if not dep.independent:
        return MuMiss(source, "ratio depends on xi only", {"ratio": ex.to_text(r), "dependence": dep.as_dict()})
    grad = [simplify(ex.mul(r, differentiate(xi, v))) for v in ex.VARIABLES]
    log_mu = _anchored_potential(grad, ode.params)
    return _finish(ode, MuForm.PRODUCT, source, log_mu, grad, cfg, spec=spec)


def find_mu_product(ode: SecondOrderOde, spec: ProductFactorSpec,
                    config: SamplerConfig | None = None) -> MuResult | MuMiss:
    """Integrating factor mu(alpha(x) * beta(y) * gamma(p))."""
    return _find_xi(ode, spec, f"product form {spec.label()}", config)


def find_mu_pairwise(ode: SecondOrderOde, spec: ProductFactorSpec,
                     config: SamplerConfig | None = None) -> MuResult | MuMiss:
    """Two-factor case: exactly one of alpha, beta, gamma is identically 1."""
    if sum(spec.trivial()) != 1:
        raise FactorSpecError("pairwise form needs exactly one trivial factor")
    return _find_xi(ode, spec, f"two-factor form {spec.label()}", config)


# ---------------------------------------------------------------------------
# monomial search


def monomial_order(bound: int) -> list[tuple[int, int, int]]:
    """Candidate exponents, smallest total degree first, lexicographic within a degree."""
    rng = range(-bound, bound + 1)
    return sorted(itertools.product(rng, rng, rng), key=lambda t: (sum(map(abs, t)), t))


def monomial(m: int, n: int, k: int) -> Expression:
    return simplify(ex.mul(ex.power(ex.X, ex.const(m)), ex.power(ex.Y, ex.const(n)), ex.power(ex.P, ex.const(k))))


def search_mu_monomial(ode: SecondOrderOde, bound: int = 4, config: SamplerConfig | None = None,
                       screen_points: int = 12) -> MuResult | MuMiss:
    """First mu = x^m y^n p^k (in ``monomial_order``) making the equation exact.

    The scaled residuals divided by mu are affine in (m, n, k), so candidates are
    screened numerically first and only survivors get the full symbolic check.
    """
    source = f"monomial search |m|,|n|,|k| <= {bound}"
    a2, a1, a0 = ode.coefficients
    d = _partials(ode)
    inv = (ex.div(ex.ONE, ex.X), ex.div(ex.ONE, ex.Y), ex.div(ex.ONE, ex.P))
    # residual/mu = m*U + n*V + k*W + C, for each of the three conditions
    forms = [
        (ex.ZERO, ex.mul(inv[1], a2), ex.neg(ex.mul(inv[2], a1)), ex.sub(d["a2_y"], d["a1_p"])),
        (ex.mul(inv[0], a2), ex.ZERO, ex.neg(ex.mul(inv[2], a0)), ex.sub(d["a2_x"], d["a0_p"])),
        (ex.mul(inv[0], a1), ex.neg(ex.mul(inv[1], a0)), ex.ZERO, ex.sub(d["a1_x"], d["a0_y"])),
    ]
    cfg = config or SamplerConfig(box=auto_box(*ode.coefficients, ex.div(ex.ONE, ex.mul(ex.X, ex.Y, ex.P))),
                                  params=dict(ode.params))
    flat = [e for form in forms for e in form]
    sampler = Sampler(flat, cfg, extra_guards=[ex.X, ex.Y, ex.P])
    try:
        pts = list(sampler.points(screen_points))
    except DegenerateBoxError:
        pts = []
    table = np.array([[[compile_expr(e)(pt.x, pt.y, pt.p, pt.params) for e in form] for form in forms]
                      for pt in pts]) if pts else None
    for m, n, k in monomial_order(bound):
        if table is not None:
            coeffs = np.array([m, n, k, 1.0])
            values = table @ coeffs
            scale = np.abs(table) @ np.abs(coeffs) + 1.0
            if np.any(np.abs(values) > 1e-7 * scale):
                continue
        mu = monomial(m, n, k)
        scaled = ode.scaled(mu)
        mu_cfg = cfg.with_(box=auto_box(*scaled.coefficients, mu))
        report = check_exact(scaled, mu_cfg)
        if report.is_exact:
            spec = ProductFactorSpec(monomial(m, 0, 0), monomial(0, n, 0), monomial(0, 0, k))
            return MuResult(MuForm.PRODUCT, f"monomial search (m, n, k) = ({m}, {n}, {k})", report,
                            mu=mu, scaled=scaled, spec=spec, exponents=(m, n, k))
    return MuMiss(source, "some monomial x^m y^n y'^k makes the equation exact")


# ---------------------------------------------------------------------------


def verify_mu(ode: SecondOrderOde, mu: Expression, config: SamplerConfig | None = None) -> MuResult:
    """Scale by a user-supplied factor and report whether the result is exact."""
    mu = simplify(mu)
    if mu == ex.ZERO:
        raise ValueError("integrating factor must not be identically zero")
    cfg = config or SamplerConfig(box=auto_box(*ode.coefficients, mu), params=dict(ode.params))
    warnings = _nonvanishing(mu, cfg)
    scaled = ode.scaled(mu)
    report = check_exact(scaled, cfg.with_(box=auto_box(*scaled.coefficients, mu)) if config is None else cfg)
    return MuResult(MuForm.USER, "user supplied", report, mu=mu, scaled=scaled, warnings=warnings)
