"""Immutable expression trees over x, y, p (p stands for y') and named parameters.

Constants are exact rationals and never negative; a sign is always carried by a
``Neg`` node, which keeps printing and parsing mutually inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Mapping, Union

VARIABLES = ("x", "y", "p")
FUNCTIONS = ("exp", "ln", "sqrt", "sin", "cos", "atan")


class Expression:
    """Base class of all expression nodes."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)

    def __add__(self, other: Operand) -> Expression:
        return add(self, as_expr(other))

    def __radd__(self, other: Operand) -> Expression:
        return add(as_expr(other), self)

    def __sub__(self, other: Operand) -> Expression:
        return sub(self, as_expr(other))

    def __rsub__(self, other: Operand) -> Expression:
        return sub(as_expr(other), self)

    def __mul__(self, other: Operand) -> Expression:
        return mul(self, as_expr(other))

    def __rmul__(self, other: Operand) -> Expression:
        return mul(as_expr(other), self)

    def __truediv__(self, other: Operand) -> Expression:
        return div(self, as_expr(other))

    def __rtruediv__(self, other: Operand) -> Expression:
        return div(as_expr(other), self)

    def __pow__(self, other: Operand) -> Expression:
        return power(self, as_expr(other))

    def __neg__(self) -> Expression:
        return neg(self)


@dataclass(frozen=True, eq=True)
class Const(Expression):
    value: Fraction

    def __post_init__(self):
        value = self.value
        if not isinstance(value, Fraction):
            value = Fraction(value)
            object.__setattr__(self, "value", value)
        if value < 0:
            raise ValueError("Const holds nonnegative values; wrap negatives in Neg")

    @property
    def is_integer(self) -> bool:
        return self.value.denominator == 1


@dataclass(frozen=True, eq=True)
class Var(Expression):
    name: str

    def __post_init__(self):
        if self.name not in VARIABLES:
            raise ValueError(f"unknown variable {self.name!r}")


@dataclass(frozen=True, eq=True)
class Param(Expression):
    name: str

    def __post_init__(self):
        if self.name in VARIABLES or self.name in FUNCTIONS:
            raise ValueError(f"{self.name!r} cannot name a parameter")


@dataclass(frozen=True, eq=True)
class Sum(Expression):
    terms: tuple[Expression, ...]

    def __post_init__(self):
        if len(self.terms) < 2:
            raise ValueError("Sum needs at least two terms")


@dataclass(frozen=True, eq=True)
class Product(Expression):
    factors: tuple[Expression, ...]

    def __post_init__(self):
        if len(self.factors) < 2:
            raise ValueError("Product needs at least two factors")


@dataclass(frozen=True, eq=True)
class Quotient(Expression):
    num: Expression
    den: Expression


@dataclass(frozen=True, eq=True)
class Power(Expression):
    base: Expression
    exponent: Expression


@dataclass(frozen=True, eq=True)
class Neg(Expression):
    arg: Expression


@dataclass(frozen=True, eq=True)
class Func(Expression):
    name: str
    arg: Expression

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown function {self.name!r}")


Operand = Union[Expression, int, Fraction]

ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))
X, Y, P = Var("x"), Var("y"), Var("p")


def as_expr(value: Operand) -> Expression:
    if isinstance(value, Expression):
        return value
    if isinstance(value, (int, Fraction)):
        return const(value)
    raise TypeError(f"cannot convert {type(value).__name__} to Expression")


def var(name: str) -> Var:
    return Var(name)


# ---------------------------------------------------------------------------
# light-weight constructors: fold identities only, no algebra


def const(value: int | Fraction) -> Expression:
    value = Fraction(value)
    return Neg(Const(-value)) if value < 0 else Const(value)


def is_const(e: Expression, value: int | Fraction | None = None) -> bool:
    if isinstance(e, Neg) and isinstance(e.arg, Const):
        return value is None or -e.arg.value == value
    return isinstance(e, Const) and (value is None or e.value == value)


def const_value(e: Expression) -> Fraction:
    if isinstance(e, Neg):
        return -const_value(e.arg)
    if isinstance(e, Const):
        return e.value
    raise TypeError("not a constant")


def add(*terms: Expression) -> Expression:
    flat: list[Expression] = []
    for t in terms:
        if isinstance(t, Sum):
            flat.extend(t.terms)
        elif not is_const(t, 0):
            flat.append(t)
    if not flat:
        return ZERO
    return flat[0] if len(flat) == 1 else Sum(tuple(flat))


def neg(e: Expression) -> Expression:
    if isinstance(e, Neg):
        return e.arg
    if is_const(e, 0):
        return ZERO
    return Neg(e)


def sub(a: Expression, b: Expression) -> Expression:
    return add(a, neg(b))


def mul(*factors: Expression) -> Expression:
    flat: list[Expression] = []
    sign = 1
    for f in factors:
        while isinstance(f, Neg):
            sign, f = -sign, f.arg
        if is_const(f, 0):
            return ZERO
        if isinstance(f, Product):
            flat.extend(f.factors)
        elif not is_const(f, 1):
            flat.append(f)
    if not flat:
        body: Expression = ONE
    else:
        body = flat[0] if len(flat) == 1 else Product(tuple(flat))
    return neg(body) if sign < 0 else body


def div(a: Expression, b: Expression) -> Expression:
    if is_const(b, 0):
        raise ZeroDivisionError("symbolic division by zero")
    if is_const(a, 0):
        return ZERO
    if is_const(b, 1):
        return a
    return Quotient(a, b)


def power(base: Expression, exponent: Expression) -> Expression:
    if is_const(exponent, 0):
        return ONE
    if is_const(exponent, 1):
        return base
    return Power(base, exponent)


def func(name: str, arg: Expression) -> Expression:
    return Func(name, arg)


def exp(e: Expression) -> Expression:
    return Func("exp", e)


def ln(e: Expression) -> Expression:
    return Func("ln", e)


def sqrt(e: Expression) -> Expression:
    return Func("sqrt", e)


# ---------------------------------------------------------------------------
# traversal


def children(e: Expression) -> tuple[Expression, ...]:
    match e:
        case Sum(terms):
            return terms
        case Product(factors):
            return factors
        case Quotient(num, den):
            return (num, den)
        case Power(base, exponent):
            return (base, exponent)
        case Neg(arg) | Func(_, arg):
            return (arg,)
    return ()


def walk(e: Expression) -> Iterator[Expression]:
    yield e
    for c in children(e):
        yield from walk(c)


def variables(e: Expression) -> frozenset[str]:
    return frozenset(n.name for n in walk(e) if isinstance(n, Var))


def parameters(e: Expression) -> frozenset[str]:
    return frozenset(n.name for n in walk(e) if isinstance(n, Param))


def depends_on(e: Expression, name: str) -> bool:
    return any(isinstance(n, (Var, Param)) and n.name == name for n in walk(e))


def rebuild(e: Expression, kids: tuple[Expression, ...]) -> Expression:
    match e:
        case Sum():
            return Sum(kids)
        case Product():
            return Product(kids)
        case Quotient():
            return Quotient(*kids)
        case Power():
            return Power(*kids)
        case Neg():
            return Neg(kids[0])
        case Func(name, _):
            return Func(name, kids[0])
    return e


def substitute(e: Expression, mapping: Mapping[str, Expression]) -> Expression:
    """Replace variables and parameters by name; the tree is otherwise untouched."""
    if isinstance(e, (Var, Param)):
        return mapping.get(e.name, e)
    kids = children(e)
    if not kids:
        return e
    return rebuild(e, tuple(substitute(k, mapping) for k in kids))


def singular_parts(e: Expression) -> list[Expression]:
    """Subexpressions whose zeros (or sign) make ``e`` undefined."""
    parts = []
    for n in walk(e):
        if isinstance(n, Quotient):
            parts.append(n.den)
        elif isinstance(n, Power) and not (is_const(n.exponent) and const_value(n.exponent) >= 0
                                           and const_value(n.exponent).denominator == 1):
            parts.append(n.base)
        elif isinstance(n, Func) and n.name in ("ln", "sqrt"):
            parts.append(n.arg)
    return parts


# ---------------------------------------------------------------------------
# printing

_SUM, _NEG, _PRODUCT, _POWER, _ATOM = 1, 2, 3, 4, 5


def _prec(e: Expression) -> int:
    match e:
        case Sum():
            return _SUM
        case Neg():
            return _NEG
        case Product() | Quotient():
            return _PRODUCT
        case Const() if not e.is_integer:
            return _PRODUCT
        case Power():
            return _POWER
    return _ATOM


def _wrap(e: Expression, ok: bool) -> str:
    text = to_text(e)
    return text if ok else f"({text})"


def _is_int_literal(e: Expression) -> bool:
    return isinstance(e, Const) and e.is_integer


def to_text(e: Expression) -> str:
    """Canonical text: explicit ``*`` and ``^``, parentheses only where precedence needs them."""
    match e:
        case Const(value):
            if value.denominator == 1:
                return str(value.numerator)
            return f"{value.numerator}/{value.denominator}"
        case Var(name) | Param(name):
            return name
        case Func(name, arg):
            return f"{name}({to_text(arg)})"
        case Neg(arg):
            return "-" + _wrap(arg, _prec(arg) >= _PRODUCT)
        case Sum(terms):
            out = [_wrap(terms[0], _prec(terms[0]) >= _NEG)]
            for t in terms[1:]:
                if isinstance(t, Neg):
                    out.append(" - " + _wrap(t.arg, _prec(t.arg) >= _PRODUCT))
                else:
                    out.append(" + " + _wrap(t, _prec(t) >= _PRODUCT))
            return "".join(out)
        case Product(factors):
            first = factors[0]
            out = [_wrap(first, _prec(first) >= _PRODUCT and not isinstance(first, Product))]
            out += [_wrap(f, _prec(f) >= _POWER) for f in factors[1:]]
            return "*".join(out)
        case Quotient(num, den):
            num_ok = _prec(num) >= _PRODUCT and not (_is_int_literal(num) and _is_int_literal(den))
            return _wrap(num, num_ok) + "/" + _wrap(den, _prec(den) >= _POWER)
        case Power(base, exponent):
            return _wrap(base, _prec(base) >= _ATOM) + "^" + _wrap(exponent, _prec(exponent) >= _ATOM)
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# numeric evaluation


class EvaluationError(ArithmeticError):
    """Evaluation failed at a point (domain error or overflow)."""

    def __init__(self, message: str, node: Expression | None = None, point: Point3 | None = None):
        super().__init__(message)
        self.node = node
        self.point = point


class UnboundParameterError(KeyError):
    pass


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    p: float
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for name in VARIABLES:
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"coordinate {name}={value} is not finite")
            object.__setattr__(self, name, float(value))

    def coords(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.p)

    def replace(self, **coords: float) -> Point3:
        values = {"x": self.x, "y": self.y, "p": self.p}
        values.update(coords)
        return Point3(values["x"], values["y"], values["p"], self.params)

    def __str__(self) -> str:
        return f"(x={self.x:g}, y={self.y:g}, p={self.p:g})"


class _Domain(Exception):
    def __init__(self, node: Expression, reason: str):
        self.node, self.reason = node, reason


Compiled = Callable[[float, float, float, Mapping[str, float]], float]


def _pow(node, b: float, e: float) -> float:
    if b < 0 and not float(e).is_integer():
        raise _Domain(node, "negative base with non-integer exponent")
    if b == 0 and e < 0:
        raise _Domain(node, "division by zero")
    try:
        return b ** e
    except OverflowError:
        raise _Domain(node, "overflow") from None


def _apply(node: Func, v: float) -> float:
    match node.name:
        case "exp":
            if v > 709.0:
                raise _Domain(node, "overflow")
            return math.exp(v)
        case "ln":
            if v <= 0:
                raise _Domain(node, "logarithm of a non-positive value")
            return math.log(v)
        case "sqrt":
            if v < 0:
                raise _Domain(node, "square root of a negative value")
            return math.sqrt(v)
        case "sin":
            return math.sin(v)
        case "cos":
            return math.cos(v)
        case "atan":
            return math.atan(v)
    raise _Domain(node, "unknown function")


def _build(e: Expression) -> Compiled:
    match e:
        case Const(value):
            c = float(value)
            return lambda x, y, p, env: c
        case Var("x"):
            return lambda x, y, p, env: x
        case Var("y"):
            return lambda x, y, p, env: y
        case Var("p"):
            return lambda x, y, p, env: p
        case Param(name):
            def param(x, y, p, env):
                try:
                    return env[name]
                except KeyError:
                    raise UnboundParameterError(name) from None
            return param
        case Sum(terms):
            fs = [_build(t) for t in terms]
            return lambda x, y, p, env: math.fsum(f(x, y, p, env) for f in fs)
        case Product(factors):
            fs = [_build(f) for f in factors]

            def product(x, y, p, env):
                acc = 1.0
                for f in fs:
                    acc *= f(x, y, p, env)
                return acc
            return product
        case Quotient(num, den):
            fn, fd = _build(num), _build(den)

            def quotient(x, y, p, env):
                d = fd(x, y, p, env)
                if d == 0.0:
                    raise _Domain(e, "division by zero")
                return fn(x, y, p, env) / d
            return quotient
        case Power(base, exponent):
            fb, fe = _build(base), _build(exponent)
            return lambda x, y, p, env: _pow(e, fb(x, y, p, env), fe(x, y, p, env))
        case Neg(arg):
            fa = _build(arg)
            return lambda x, y, p, env: -fa(x, y, p, env)
        case Func():
            fa = _build(e.arg)
            return lambda x, y, p, env: _apply(e, fa(x, y, p, env))
    raise TypeError(f"not an expression: {e!r}")


@lru_cache(maxsize=4096)
def compile_expr(e: Expression) -> Compiled:
    """Compile to a plain function ``f(x, y, p, params)`` raising EvaluationError on domain errors."""
    inner = _build(e)

    def run(x: float, y: float, p: float, env: Mapping[str, float] = {}) -> float:
        try:
            value = inner(x, y, p, env)
        except _Domain as err:
            raise EvaluationError(f"{err.reason} in {to_text(err.node)} at (x={x!r}, y={y!r}, p={p!r})",
                                  err.node, Point3(x, y, p, env)) from None
        except OverflowError:
            raise EvaluationError(f"overflow evaluating {to_text(e)}", e, Point3(x, y, p, env)) from None
        if not math.isfinite(value):
            raise EvaluationError(f"non-finite value of {to_text(e)} at (x={x!r}, y={y!r}, p={p!r})",
                                  e, Point3(x, y, p, env))
        return value

    return run


def evaluate(e: Expression, at: Point3) -> float:
    return compile_expr(e)(at.x, at.y, at.p, at.params)
