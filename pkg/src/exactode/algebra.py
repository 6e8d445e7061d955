"""Canonical simplification, backed by sympy's rational-function arithmetic.

Trees make a round trip through sympy.  Function arguments are normalized
recursively with ``exp``/``ln`` pairs folded; one ``cancel`` pass then leaves an
expanded numerator over an expanded denominator with common factors removed.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import sympy as sp

from . import expr as ex
from .expr import Const, Expression, Func, Neg, Param, Power, Product, Quotient, Sum, Var

_SYMBOLS: dict[str, sp.Symbol] = {}


class UnsupportedExpression(ValueError):
    pass


def symbol(name: str) -> sp.Symbol:
    s = _SYMBOLS.get(name)
    if s is None:
        s = _SYMBOLS[name] = sp.Symbol(name)
    return s


_TO_SYMPY_FUNC = {"exp": sp.exp, "ln": sp.log, "sqrt": sp.sqrt, "sin": sp.sin, "cos": sp.cos, "atan": sp.atan}


@lru_cache(maxsize=8192)
def to_sympy(e: Expression) -> sp.Expr:
    match e:
        case Const(value):
            return sp.Rational(value.numerator, value.denominator)
        case Var(name) | Param(name):
            return symbol(name)
        case Sum(terms):
            return sp.Add(*[to_sympy(t) for t in terms])
        case Product(factors):
            return sp.Mul(*[to_sympy(f) for f in factors])
        case Quotient(num, den):
            return to_sympy(num) / to_sympy(den)
        case Power(base, exponent):
            return sp.Pow(to_sympy(base), to_sympy(exponent))
        case Neg(arg):
            return -to_sympy(arg)
        case Func(name, arg):
            return _TO_SYMPY_FUNC[name](to_sympy(arg))
    raise TypeError(f"not an expression: {e!r}")


_FROM_SYMPY_FUNC = {sp.exp: "exp", sp.log: "ln", sp.sin: "sin", sp.cos: "cos", sp.atan: "atan"}


def _symbol_expr(name: str) -> Expression:
    return Var(name) if name in ex.VARIABLES else Param(name)


def from_sympy(s: sp.Expr) -> Expression:
    if s.is_Rational:
        return ex.const(Fraction(int(s.p), int(s.q)))
    if s is sp.E:
        return Func("exp", ex.ONE)
    if s.is_Symbol:
        return _symbol_expr(s.name)
    if s.is_Add:
        terms = []
        for t in s.as_ordered_terms():
            if t.could_extract_minus_sign():
                terms.append(Neg(from_sympy(-t)))
            else:
                terms.append(from_sympy(t))
        return Sum(tuple(terms))
    if s.is_Mul:
        if s.could_extract_minus_sign():
            return Neg(from_sympy(-s))
        num, den = sp.fraction(s)
        if den != 1:
            return Quotient(from_sympy(num), from_sympy(den))
        factors = [from_sympy(f) for f in sp.Mul.make_args(num)] if num.is_Mul else [from_sympy(num)]
        return factors[0] if len(factors) == 1 else Product(tuple(factors))
    if s.is_Pow:
        base, exponent = s.args
        if exponent.is_Rational and exponent < 0:
            return Quotient(ex.ONE, from_sympy(sp.Pow(base, -exponent)))
        if exponent == sp.Rational(1, 2):
            return Func("sqrt", from_sympy(base))
        return Power(from_sympy(base), from_sympy(exponent))
    for cls, name in _FROM_SYMPY_FUNC.items():
        if isinstance(s, cls):
            return Func(name, from_sympy(s.args[0]))
    raise UnsupportedExpression(f"cannot represent {s!r}")


def _exp_of(arg: sp.Expr) -> sp.Expr:
    """exp(sum c_i ln f_i + r) -> prod f_i^c_i * exp(r)."""
    factors = []
    rest = []
    for t in sp.Add.make_args(arg):
        c, body = t.as_coeff_Mul()
        if isinstance(body, sp.log) and c.is_Rational:
            factors.append(sp.Pow(body.args[0], c))
        else:
            rest.append(t)
    return sp.Mul(*factors) * sp.exp(sp.Add(*rest))


def _fold(s: sp.Expr) -> sp.Expr:
    if s.is_Atom:
        return s
    if isinstance(s, sp.exp):
        return _exp_of(canonical(s.args[0]))
    if isinstance(s, sp.log):
        arg = canonical(s.args[0])
        if isinstance(arg, sp.exp):
            return arg.args[0]
        return sp.log(arg)
    if isinstance(s, (sp.sin, sp.cos, sp.atan)):
        return s.func(canonical(s.args[0]))
    return s.func(*[_fold(a) for a in s.args])


def canonical(s: sp.Expr) -> sp.Expr:
    folded = _fold(s)
    # cancel would rewrite inside function arguments; hide them behind dummies
    calls = folded.atoms(sp.exp, sp.log, sp.sin, sp.cos, sp.atan)
    hide = {c: sp.Dummy() for c in calls}
    out = sp.cancel(folded.xreplace(hide))
    return out.xreplace({d: c for c, d in hide.items()})


_BAD = (sp.zoo, sp.nan, sp.oo, -sp.oo, sp.I)


@lru_cache(maxsize=8192)
def simplify(e: Expression) -> Expression:
    """Return the canonical form of ``e``; ``e`` itself if it has no finite canonical form."""
    try:
        s = canonical(to_sympy(e))
        if s.has(*_BAD):
            return e
        return from_sympy(s)
    except (UnsupportedExpression, sp.PolynomialError, ZeroDivisionError, TypeError):
        return e


def merge_logs(e: Expression) -> Expression:
    """Combine c*ln(a) + c*ln(b) into c*ln(a*b) (and c*ln(a) - c*ln(b) into c*ln(a/b)).

    Wherever the input is defined the result agrees with it, so this is safe for
    presentation; the combined argument is cancelled, which removes factors that
    different integration legs introduced and took away again.
    """
    try:
        s = canonical(to_sympy(e))
    except (UnsupportedExpression, sp.PolynomialError, ZeroDivisionError, TypeError):
        return e
    groups: dict[sp.Rational, sp.Expr] = {}
    rest = []
    for t in sp.Add.make_args(sp.expand(s, deep=False)):
        c, body = t.as_coeff_Mul()
        if isinstance(body, sp.log) and c.is_Rational:
            arg = body.args[0] if c > 0 else 1 / body.args[0]
            groups[abs(c)] = groups.get(abs(c), sp.Integer(1)) * arg
        else:
            rest.append(t)
    merged = [c * sp.log(sp.cancel(arg)) for c, arg in groups.items() if sp.cancel(arg) != 1]
    out = canonical(sp.Add(*rest, *merged))
    if out.has(*_BAD):
        return e
    return from_sympy(out)


def is_zero(e: Expression) -> bool:
    return simplify(e) == ex.ZERO


def equal(a: Expression, b: Expression) -> bool:
    """Symbolic equality after canonical simplification of the difference."""
    return is_zero(ex.sub(a, b))
