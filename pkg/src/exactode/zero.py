"""Tri-state identical-zero and variable-dependence decisions.

Symbolic simplification proves what it can; otherwise a seeded sampler looks
for a witness point.  Sample points too close to a singular part (a
denominator, or the argument of ln or sqrt) are rejected.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import expr as ex
from .algebra import simplify
from .calculus import differentiate
from .expr import EvaluationError, Expression, Point3, compile_expr

Box = tuple[tuple[float, float], tuple[float, float], tuple[float, float]]
DEFAULT_BOX: Box = ((-2.0, 2.0), (-2.0, 2.0), (-2.0, 2.0))
SHIFTED_RANGE = (0.1, 2.1)


class DegenerateBoxError(ValueError):
    """No usable sample point could be drawn from the box."""


@dataclass(frozen=True)
class SamplerConfig:
    n: int = 64
    tol: float = 1e-9
    seed: int = 42
    box: Box = DEFAULT_BOX
    params: Mapping[str, float] = field(default_factory=dict)
    margin: float = 1e-3
    max_attempts: int = 50

    def __post_init__(self):
        if self.n < 32:
            raise ValueError("sampler needs at least 32 points")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        for lo, hi in self.box:
            if not hi > lo:
                raise ValueError(f"degenerate box range [{lo}, {hi}]")

    def with_(self, **changes) -> SamplerConfig:
        values = {f: getattr(self, f) for f in self.__dataclass_fields__}
        values.update(changes)
        return SamplerConfig(**values)


def auto_box(*exprs: Expression, base: Box = DEFAULT_BOX) -> Box:
    """Default box, with variables that occur in denominators, ln or sqrt moved to [0.1, 2.1]."""
    shifted: set[str] = set()
    for e in exprs:
        for part in ex.singular_parts(e):
            shifted |= ex.variables(part)
    return tuple(SHIFTED_RANGE if name in shifted else rng
                 for name, rng in zip(ex.VARIABLES, base))  # type: ignore[return-value]


class Sampler:
    """Draws points from a box at which a set of expressions is safely evaluable."""

    def __init__(self, exprs: Iterable[Expression], config: SamplerConfig, extra_guards: Sequence[Expression] = ()):
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.targets = [compile_expr(e) for e in exprs]
        guards = list(extra_guards)
        for e in exprs:
            guards += ex.singular_parts(e)
        self.guards = [compile_expr(g) for g in dict.fromkeys(guards)]
        self.lo = np.array([b[0] for b in config.box])
        self.hi = np.array([b[1] for b in config.box])

    def acceptable(self, x: float, y: float, p: float) -> bool:
        env = self.config.params
        try:
            for g in self.guards:
                if abs(g(x, y, p, env)) < self.config.margin:
                    return False
            for f in self.targets:
                f(x, y, p, env)
        except EvaluationError:
            return False
        return True

    def draw(self, keep: Mapping[str, float] | None = None) -> Point3 | None:
        """One acceptable point; coordinates named in ``keep`` are held fixed."""
        for _ in range(self.config.max_attempts):
            x, y, p = self.rng.uniform(self.lo, self.hi)
            if keep:
                x, y, p = keep.get("x", x), keep.get("y", y), keep.get("p", p)
            if self.acceptable(x, y, p):
                return Point3(x, y, p, self.config.params)
        return None

    def points(self, n: int | None = None) -> Iterator[Point3]:
        n = self.config.n if n is None else n
        budget = n * self.config.max_attempts
        produced = 0
        while produced < n and budget > 0:
            x, y, p = self.rng.uniform(self.lo, self.hi)
            budget -= 1
            if self.acceptable(x, y, p):
                produced += 1
                yield Point3(x, y, p, self.config.params)
        if produced == 0:
            raise DegenerateBoxError("every candidate sample point hit a singularity or domain error")


class Verdict(enum.Enum):
    PROVEN_ZERO = "proven-zero"
    SAMPLED_ZERO = "sampled-zero"
    NONZERO = "nonzero"


@dataclass(frozen=True)
class ZeroVerdict:
    kind: Verdict
    n: int = 0
    tol: float | None = None
    seed: int | None = None
    max_abs: float | None = None
    witness: Point3 | None = None
    value: float | None = None

    @property
    def is_zero(self) -> bool:
        return self.kind is not Verdict.NONZERO

    @property
    def proven(self) -> bool:
        return self.kind is Verdict.PROVEN_ZERO

    def as_dict(self) -> dict:
        out: dict = {"verdict": self.kind.value}
        if self.kind is not Verdict.PROVEN_ZERO:
            out.update(n=self.n, tol=self.tol, seed=self.seed)
        if self.kind is Verdict.SAMPLED_ZERO:
            out["max_abs"] = self.max_abs
        if self.witness is not None:
            out["witness"] = {"x": self.witness.x, "y": self.witness.y, "p": self.witness.p}
            out["value"] = self.value
        return out


def is_identically_zero(e: Expression, config: SamplerConfig | None = None) -> ZeroVerdict:
    config = config or SamplerConfig()
    if simplify(e) == ex.ZERO:
        return ZeroVerdict(Verdict.PROVEN_ZERO)
    f = compile_expr(e)
    sampler = Sampler([e], config)
    worst, count = 0.0, 0
    for pt in sampler.points():
        value = f(pt.x, pt.y, pt.p, pt.params)
        count += 1
        if abs(value) > config.tol:
            return ZeroVerdict(Verdict.NONZERO, count, config.tol, config.seed, witness=pt, value=value)
        worst = max(worst, abs(value))
    return ZeroVerdict(Verdict.SAMPLED_ZERO, count, config.tol, config.seed, max_abs=worst)


class Dependence(enum.Enum):
    PROVEN_INDEPENDENT = "proven-independent"
    SAMPLED_INDEPENDENT = "sampled-independent"
    DEPENDENT = "dependent"


@dataclass(frozen=True)
class DependenceVerdict:
    kind: Dependence
    keep: frozenset[str]
    n: int = 0
    max_variation: float | None = None
    witnesses: tuple[Point3, Point3] | None = None
    values: tuple[float, float] | None = None

    @property
    def independent(self) -> bool:
        return self.kind is not Dependence.DEPENDENT

    def as_dict(self) -> dict:
        out: dict = {"verdict": self.kind.value, "keep": sorted(self.keep)}
        if self.kind is Dependence.SAMPLED_INDEPENDENT:
            out.update(n=self.n, max_variation=self.max_variation)
        if self.witnesses:
            out["witnesses"] = [{"x": w.x, "y": w.y, "p": w.p} for w in self.witnesses]
            out["values"] = list(self.values)
        return out


def depends_only_on(e: Expression, keep: Iterable[str], config: SamplerConfig | None = None) -> DependenceVerdict:
    """Decide whether ``e`` is a function of the variables in ``keep`` alone."""
    config = config or SamplerConfig()
    keep = frozenset(keep)
    excluded = [v for v in ex.VARIABLES if v not in keep]
    s = simplify(e)
    if not (ex.variables(s) & set(excluded)) or all(differentiate(s, v) == ex.ZERO for v in excluded):
        return DependenceVerdict(Dependence.PROVEN_INDEPENDENT, keep)
    f = compile_expr(e)
    sampler = Sampler([e], config)
    worst, count = 0.0, 0
    for first in sampler.points():
        second = sampler.draw({v: getattr(first, v) for v in keep})
        if second is None:
            continue
        a = f(first.x, first.y, first.p, first.params)
        b = f(second.x, second.y, second.p, second.params)
        count += 1
        if abs(a - b) > config.tol:
            return DependenceVerdict(Dependence.DEPENDENT, keep, count, abs(a - b), (first, second), (a, b))
        worst = max(worst, abs(a - b))
    if count == 0:
        raise DegenerateBoxError("could not draw paired sample points")
    return DependenceVerdict(Dependence.SAMPLED_INDEPENDENT, keep, count, worst)


def relative_spread(values: Sequence[float]) -> float:
    """Coefficient of variation, std/|mean|."""
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if mean == 0.0:
        return math.inf
    return float(arr.std() / abs(mean))
