"""Exactness test plus first integrals of exact equations.

An equation ``a2*y'' + a1*y' + a0 = 0`` is exact when some Psi(x, y, p) has
gradient ``(a0, a1, a2)``.  Psi is assembled from three
one-dimensional integrals along axis-parallel legs starting at a base point.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from scipy import integrate

from . import expr as ex
from .algebra import merge_logs, simplify
from .calculus import differentiate, integrate_definite
from .expr import EvaluationError, Expression, Param, Point3, compile_expr, evaluate
from .parser import parse
from .zero import SamplerConfig, ZeroVerdict, auto_box, is_identically_zero

log = logging.getLogger(__name__)

QUAD_TOL = 1e-10
BASE_CANDIDATES = ((0.0, 0.0, 0.0), (0.1, 0.1, 0.1), (1.0, 1.0, 1.0), (0.5, 0.5, 0.5), (1.0, 1.0, 0.0))


class NotExactError(ValueError):
    pass


class SingularLegError(ValueError):
    def __init__(self, message: str, leg: int | None = None):
        super().__init__(message)
        self.leg = leg


@dataclass(frozen=True)
class SecondOrderOde:
    """``a2*y'' + a1*y' + a0 = 0`` with coefficients in x, y and p = y'."""

    a2: Expression
    a1: Expression
    a0: Expression
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if simplify(self.a2) == ex.ZERO:
            raise ValueError("a2 vanishes identically; the equation is not second order")
        used = ex.parameters(self.a2) | ex.parameters(self.a1) | ex.parameters(self.a0)
        missing = used - set(self.params)
        if missing:
            raise ValueError(f"undeclared parameters: {', '.join(sorted(missing))}")

    @classmethod
    def parse(cls, a2: str, a1: str, a0: str, params: Mapping[str, float] | None = None) -> SecondOrderOde:
        return cls(parse(a2), parse(a1), parse(a0), dict(params or {}))

    @property
    def coefficients(self) -> tuple[Expression, Expression, Expression]:
        return (self.a2, self.a1, self.a0)

    def scaled(self, mu: Expression) -> SecondOrderOde:
        return SecondOrderOde(*(simplify(ex.mul(mu, a)) for a in self.coefficients), params=self.params)

    def point(self, x: float, y: float, p: float) -> Point3:
        return Point3(x, y, p, self.params)

    def sampler_config(self, **overrides) -> SamplerConfig:
        box = overrides.pop("box", None) or auto_box(*self.coefficients)
        return SamplerConfig(box=box, params=dict(self.params), **overrides)

    def __str__(self) -> str:
        a2, a1, a0 = (ex.to_text(a) for a in self.coefficients)
        return f"({a2})*y'' + ({a1})*y' + ({a0}) = 0"


class Exactness(enum.Enum):
    EXACT = "exact"
    SAMPLED_EXACT = "numerically-exact"
    NOT_EXACT = "not-exact"


@dataclass(frozen=True)
class ExactnessReport:
    residuals: tuple[Expression, Expression, Expression]
    verdicts: tuple[ZeroVerdict, ZeroVerdict, ZeroVerdict]

    @property
    def verdict(self) -> Exactness:
        if any(not v.is_zero for v in self.verdicts):
            return Exactness.NOT_EXACT
        if all(v.proven for v in self.verdicts):
            return Exactness.EXACT
        return Exactness.SAMPLED_EXACT

    @property
    def is_exact(self) -> bool:
        return self.verdict is not Exactness.NOT_EXACT

    @property
    def failures(self) -> list[int]:
        return [i for i, v in enumerate(self.verdicts) if not v.is_zero]

    def as_dict(self) -> dict:
        names = ("d(a2)/dy - d(a1)/dp", "d(a2)/dx - d(a0)/dp", "d(a1)/dx - d(a0)/dy")
        return {
            "verdict": self.verdict.value,
            "residuals": [
                {"condition": name, "residual": ex.to_text(r), **v.as_dict()}
                for name, r, v in zip(names, self.residuals, self.verdicts)
            ],
        }


def exactness_residuals(a2: Expression, a1: Expression, a0: Expression) -> tuple[Expression, ...]:
    d = differentiate
    return (
        simplify(ex.sub(d(a2, "y"), d(a1, "p"))),
        simplify(ex.sub(d(a2, "x"), d(a0, "p"))),
        simplify(ex.sub(d(a1, "x"), d(a0, "y"))),
    )


def report_for(residuals: Sequence[Expression], config: SamplerConfig) -> ExactnessReport:
    verdicts = tuple(is_identically_zero(r, config) for r in residuals)
    return ExactnessReport(tuple(residuals), verdicts)


def check_exact(ode: SecondOrderOde, config: SamplerConfig | None = None) -> ExactnessReport:
    config = config or ode.sampler_config()
    return report_for(exactness_residuals(*ode.coefficients), config)


# ---------------------------------------------------------------------------
# first integrals


def exact_fraction(value: float) -> Fraction:
    return Fraction(repr(float(value)))


@dataclass(frozen=True)
class Leg:
    """One axis-parallel piece of the potential: integrate ``integrand`` in ``variable``."""

    variable: str
    integrand: Expression
    lower: float
    closed: Expression | None = None

    def value(self, at: Point3) -> float:
        if self.closed is not None:
            return evaluate(self.closed, at)
        f = compile_expr(self.integrand)
        x, y, p, env = at.x, at.y, at.p, at.params
        upper = getattr(at, self.variable)
        if self.variable == "x":
            fn = lambda t: f(t, y, p, env)  # noqa: E731
        elif self.variable == "y":
            fn = lambda t: f(x, t, p, env)  # noqa: E731
        else:
            fn = lambda t: f(x, y, t, env)  # noqa: E731
        value, _ = integrate.quad(fn, self.lower, upper, epsabs=QUAD_TOL, epsrel=1e-12, limit=200)
        return value


@dataclass(frozen=True)
class FirstIntegral:
    """Psi with ``Psi(base) = 0``; closed form when every leg integrated symbolically."""

    legs: tuple[Leg, ...]
    base: Point3
    psi: Expression | None
    params: Mapping[str, float] = field(default_factory=dict)
    c: float | None = None

    @classmethod
    def from_expression(cls, psi: Expression, params: Mapping[str, float] | None = None,
                        base: Point3 | None = None) -> FirstIntegral:
        """Wrap a known closed-form candidate (used to test hand-derived integrals)."""
        params = dict(params or {})
        base = base or Point3(0.0, 0.0, 0.0, params)
        return cls((), base, psi, params)

    @property
    def closed_form(self) -> bool:
        return self.psi is not None

    def __call__(self, x: float | Point3, y: float | None = None, p: float | None = None) -> float:
        at = x if isinstance(x, Point3) else Point3(x, y, p, self.params)
        if at.params is not self.params and not at.params:
            at = Point3(at.x, at.y, at.p, self.params)
        if self.psi is not None:
            return evaluate(self.psi, at)
        return math.fsum(leg.value(at) for leg in self.legs)

    def with_level(self, c: float | None) -> FirstIntegral:
        return FirstIntegral(self.legs, self.base, self.psi, self.params, c)

    def __str__(self) -> str:
        return ex.to_text(self.psi) if self.psi is not None else "<quadrature first integral>"


def _pin(e: Expression, **coords: Fraction) -> Expression:
    return simplify(ex.substitute(e, {k: ex.const(v) for k, v in coords.items()}))


def potential(gx: Expression, gy: Expression, gp: Expression, base: Point3) -> FirstIntegral:
    """Function with gradient (gx, gy, gp) vanishing at ``base``, assuming the field is curl-free."""
    x0, y0, p0 = (exact_fraction(c) for c in base.coords())
    plan = (
        ("x", gx),
        ("y", _pin(gy, x=x0)),
        ("p", _pin(gp, x=x0, y=y0)),
    )
    legs = []
    for i, ((v, integrand), lower) in enumerate(zip(plan, (x0, y0, p0))):
        try:
            evaluate(integrand, base)
        except EvaluationError as err:
            raise SingularLegError(f"integrand of leg {i + 1} (d{v}) is singular at the base point {base}: {err}",
                                   i) from None
        closed = integrate_definite(integrand, v, lower)
        if closed is None:
            log.info("leg %d has no closed form; using quadrature", i + 1)
        legs.append(Leg(v, integrand, float(lower), closed))
    psi = None
    if all(leg.closed is not None for leg in legs):
        psi = merge_logs(simplify(ex.add(*(leg.closed for leg in legs))))
    fi = FirstIntegral(tuple(legs), base, psi, dict(base.params))
    try:
        at_base = fi(base)
    except EvaluationError as err:
        raise SingularLegError(f"first integral is singular at the base point {base}: {err}") from None
    if abs(at_base) > 1e-9:
        raise SingularLegError(f"first integral does not vanish at the base point ({at_base:g})")
    return fi


def build_first_integral(ode: SecondOrderOde, base: Point3 | tuple[float, float, float] | None = None,
                         config: SamplerConfig | None = None) -> FirstIntegral:
    """Construct Psi with gradient (a0, a1, a2) in (x, y, p).

    Without an explicit base point the default (0, 0, 0) is tried first and then a
    few offsets, skipping any base at which one of the legs is singular.
    """
    report = check_exact(ode, config)
    if not report.is_exact:
        raise NotExactError(f"equation is not exact; failing conditions {report.failures}")
    if base is not None:
        pt = base if isinstance(base, Point3) else ode.point(*base)
        return potential(ode.a0, ode.a1, ode.a2, Point3(pt.x, pt.y, pt.p, ode.params))
    errors = []
    for candidate in BASE_CANDIDATES:
        try:
            return potential(ode.a0, ode.a1, ode.a2, ode.point(*candidate))
        except SingularLegError as err:
            errors.append(str(err))
    raise SingularLegError("no usable base point: " + "; ".join(errors))


# ---------------------------------------------------------------------------
# reduction


@dataclass(frozen=True)
class ReducedOde:
    """``Psi(x, y, p) = c`` and, when Psi is affine in p, the explicit ``p = f(x, y)``."""

    ode: SecondOrderOde
    first_integral: FirstIntegral
    c: float | None
    level: Expression
    implicit: Expression | None
    explicit: Expression | None

    def explicit_text(self) -> str | None:
        return None if self.explicit is None else f"p = {ex.to_text(self.explicit)}"

    def implicit_text(self) -> str:
        return f"{self.first_integral} = {ex.to_text(self.level)}"

    def slope(self, x: float, y: float) -> float:
        if self.explicit is None:
            raise ValueError("no explicit first-order form")
        env = dict(self.ode.params)
        if self.c is not None:
            env["c"] = self.c
        return compile_expr(self.explicit)(x, y, 0.0, env)


def _level_constant(fi: FirstIntegral, initial: Point3) -> tuple[float, Expression]:
    if fi.psi is not None:
        exact = {k: ex.const(exact_fraction(getattr(initial, k))) for k in ex.VARIABLES}
        pinned = simplify(ex.substitute(fi.psi, exact))
        if ex.is_const(pinned):
            value = ex.const_value(pinned)
            return float(value), ex.const(value)
    value = fi(initial)
    return value, ex.const(exact_fraction(value))


def reduce(ode: SecondOrderOde, initial: Point3 | tuple[float, float, float] | None = None,
           base: Point3 | tuple[float, float, float] | None = None,
           config: SamplerConfig | None = None) -> ReducedOde:
    """Reduce an exact equation to ``Psi = c``; ``c`` is fixed by ``initial`` when given."""
    fi = build_first_integral(ode, base, config)
    if initial is not None:
        if not isinstance(initial, Point3):
            initial = ode.point(*initial)
        c, level = _level_constant(fi, initial)
    else:
        c, level = None, Param("c")
    fi = fi.with_level(c)
    if fi.psi is None:
        return ReducedOde(ode, fi, c, level, None, None)
    implicit = simplify(ex.sub(fi.psi, level))
    explicit = None
    config = config or ode.sampler_config()
    curvature = differentiate(differentiate(fi.psi, "p"), "p")
    if curvature == ex.ZERO or is_identically_zero(curvature, _with_c(config, c)).is_zero:
        slope = differentiate(fi.psi, "p")
        if slope == ex.ZERO:
            raise ValueError("first integral does not depend on p; cannot solve for p")
        offset = simplify(ex.substitute(fi.psi, {"p": ex.ZERO}))
        explicit = simplify(ex.div(ex.sub(level, offset), slope))
    return ReducedOde(ode, fi, c, level, implicit, explicit)


def _with_c(config: SamplerConfig, c: float | None) -> SamplerConfig:
    return config.with_(params={**config.params, "c": 0.0 if c is None else c})
