"""Partial derivatives and antiderivatives for the polynomial/rational class."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import sympy as sp

from . import expr as ex
from .algebra import canonical, from_sympy, simplify, symbol, to_sympy
from .expr import Const, Expression, Func, Neg, Power, Product, Quotient, Sum, Var


def _name(v: str | Var) -> str:
    name = v.name if isinstance(v, Var) else v
    if name not in ex.VARIABLES:
        raise ValueError(f"can only differentiate with respect to x, y or p, not {name!r}")
    return name


def _d(e: Expression, v: str) -> Expression:
    if not ex.depends_on(e, v):
        return ex.ZERO
    match e:
        case Var(name):
            return ex.ONE if name == v else ex.ZERO
        case Sum(terms):
            return ex.add(*[_d(t, v) for t in terms])
        case Product(factors):
            out = []
            for i, f in enumerate(factors):
                df = _d(f, v)
                if not ex.is_const(df, 0):
                    out.append(ex.mul(*factors[:i], df, *factors[i + 1:]))
            return ex.add(*out)
        case Quotient(num, den):
            top = ex.sub(ex.mul(_d(num, v), den), ex.mul(num, _d(den, v)))
            return ex.div(top, ex.power(den, Const(2)))
        case Neg(arg):
            return ex.neg(_d(arg, v))
        case Power(base, exponent):
            if not ex.depends_on(exponent, v):
                if ex.is_const(exponent):
                    lowered = ex.const(ex.const_value(exponent) - 1)
                else:
                    lowered = ex.sub(exponent, ex.ONE)
                return ex.mul(exponent, ex.power(base, lowered), _d(base, v))
            return ex.mul(e, ex.add(ex.mul(_d(exponent, v), ex.ln(base)),
                                    ex.div(ex.mul(exponent, _d(base, v)), base)))
        case Func(name, arg):
            du = _d(arg, v)
            match name:
                case "exp":
                    return ex.mul(e, du)
                case "ln":
                    return ex.div(du, arg)
                case "sqrt":
                    return ex.div(du, ex.mul(Const(2), e))
                case "sin":
                    return ex.mul(Func("cos", arg), du)
                case "cos":
                    return ex.neg(ex.mul(Func("sin", arg), du))
                case "atan":
                    return ex.div(du, ex.add(ex.ONE, ex.power(arg, Const(2))))
    raise TypeError(f"not an expression: {e!r}")


def differentiate(e: Expression, v: str | Var, *, simplified: bool = True) -> Expression:
    """Partial derivative with x, y, p independent; simplified unless asked otherwise."""
    d = _d(e, _name(v))
    return simplify(d) if simplified else d


# ---------------------------------------------------------------------------
# antiderivatives


@dataclass
class Antiderivative:
    """F = rational + sum(c * ln(arg)) + sum(c * atan(arg)), all sympy objects."""

    rational: sp.Expr = sp.Integer(0)
    logs: list[tuple[sp.Expr, sp.Expr]] = field(default_factory=list)
    atans: list[tuple[sp.Expr, sp.Expr]] = field(default_factory=list)

    def indefinite(self) -> sp.Expr:
        out = self.rational
        out += sum((c * sp.log(a) for c, a in self.logs), sp.Integer(0))
        out += sum((c * sp.atan(a) for c, a in self.atans), sp.Integer(0))
        return out

    def definite(self, v: sp.Symbol, lower: sp.Expr) -> sp.Expr:
        """F(v) - F(lower); logarithms are merged as ln(f(v)/f(lower)) so signs cancel."""
        out = self.rational - self.rational.subs(v, lower)
        for c, a in self.logs:
            out += c * sp.log(sp.cancel(a / a.subs(v, lower)))
        for c, a in self.atans:
            out += c * (sp.atan(a) - sp.atan(a.subs(v, lower)))
        return out


def _provably_positive(e: sp.Expr) -> bool:
    if e.is_number:
        return bool(e > 0)
    reals = {s: sp.Dummy(s.name, real=True) for s in e.free_symbols}
    return bool(e.subs(reals).is_positive)


def _poly_integral(e: sp.Expr, v: sp.Symbol) -> sp.Expr:
    poly = sp.Poly(e, v)
    out = sp.Integer(0)
    for (k,), c in poly.terms():
        out += c * v ** (k + 1) / (k + 1)
    return out


def _partial_fraction_term(t: sp.Expr, v: sp.Symbol, acc: Antiderivative) -> bool:
    num, den = sp.fraction(sp.together(t))
    if num.has(v) and not num.is_polynomial(v):
        return False
    coeff, parts = sp.factor_list(den, v)
    moving = [(q, k) for q, k in parts if q.has(v)]
    fixed = sp.Mul(*[q ** k for q, k in parts if not q.has(v)])
    if len(moving) != 1:
        return False
    q, k = moving[0]
    qpoly = sp.Poly(q, v)
    npoly = sp.Poly(num, v)
    scale = coeff * fixed
    if qpoly.degree() == 1:
        if npoly.degree() > 0:
            return False
        a = qpoly.coeff_monomial(v)
        c = num / scale
        if k == 1:
            lead = qpoly.LC()
            if lead.is_number and lead < 0:
                acc.logs.append((c / a, sp.expand(-q)))
            else:
                acc.logs.append((c / a, q))
        else:
            acc.rational += c * q ** (1 - k) / (a * (1 - k))
        return True
    if qpoly.degree() == 2 and k == 1 and npoly.degree() <= 1:
        a, b, c0 = (qpoly.coeff_monomial(v ** 2), qpoly.coeff_monomial(v), qpoly.coeff_monomial(1))
        disc = sp.expand(4 * a * c0 - b ** 2)
        if not _provably_positive(disc):
            return False
        B = npoly.coeff_monomial(v) / scale
        C = npoly.coeff_monomial(1) / scale
        if B != 0:
            if a.is_number and a < 0:
                acc.logs.append((B / (2 * a), sp.expand(-q)))
            else:
                acc.logs.append((B / (2 * a), q))
        rest = sp.cancel(C - B * b / (2 * a))
        if rest != 0:
            root = sp.sqrt(disc)
            acc.atans.append((2 * rest / root, (2 * a * v + b) / root))
        return True
    return False


def antiderivative(e: Expression, v: str | Var) -> Antiderivative | None:
    """Structured antiderivative, or None outside the polynomial/rational class."""
    name = _name(v)
    sv = symbol(name)
    s = canonical(to_sympy(e))
    if not s.has(sv):
        return Antiderivative(rational=s * sv)
    try:
        if s.is_polynomial(sv):
            return Antiderivative(rational=_poly_integral(sp.expand(s), sv))
        if not s.is_rational_function(sv):
            return None
        acc = Antiderivative()
        for t in sp.Add.make_args(sp.apart(s, sv)):
            if t.is_polynomial(sv):
                acc.rational += _poly_integral(sp.expand(t), sv)
            elif not _partial_fraction_term(t, sv, acc):
                return None
        return acc
    except (sp.PolynomialError, NotImplementedError, sp.polys.polyerrors.GeneratorsNeeded):
        return None


def integrate_symbolic(e: Expression, v: str | Var) -> Expression | None:
    """An antiderivative of ``e`` in ``v``, or None when ``e`` is outside the supported class.

    Supported: polynomials in ``v`` (coefficients may be anything free of ``v``) and rational
    functions of ``v`` whose denominators split into linear and irreducible quadratic factors.
    """
    F = antiderivative(e, v)
    if F is None:
        return None
    return simplify(from_sympy(canonical(F.indefinite())))


def integrate_definite(e: Expression, v: str | Var, lower: Expression | Fraction | int) -> Expression | None:
    """Closed form of the integral of ``e`` from ``lower`` to ``v``, or None."""
    F = antiderivative(e, v)
    if F is None:
        return None
    lo = to_sympy(ex.as_expr(lower) if not isinstance(lower, Expression) else lower)
    result = canonical(F.definite(symbol(_name(v)), lo))
    if result.has(sp.zoo, sp.nan, sp.oo, -sp.oo, sp.I):
        return None
    return from_sympy(result)
