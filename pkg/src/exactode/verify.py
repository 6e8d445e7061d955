"""Numeric oracles built on finite differences and fixed-step RK4."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exactness import FirstIntegral, ReducedOde, SecondOrderOde
from .expr import EvaluationError, Expression, Point3, compile_expr, evaluate

A2_GUARD = 1e-12


class IntegrationError(RuntimeError):
    def __init__(self, message: str, x: float | None = None):
        super().__init__(message)
        self.x = x


def fd_partial(f: Callable[[Point3], float] | Expression, v: str, at: Point3, h: float = 1e-5) -> float:
    """Central difference (f(+h) - f(-h)) / 2h in coordinate ``v``."""
    if h <= 0:
        raise ValueError("step must be positive")
    if isinstance(f, Expression):
        e = f
        f = lambda pt: evaluate(e, pt)  # noqa: E731
    c = getattr(at, v)
    return (f(at.replace(**{v: c + h})) - f(at.replace(**{v: c - h}))) / (2 * h)


@dataclass(frozen=True)
class Trajectory:
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    h: float
    origin: Point3
    integrator: str = "rk4"

    def __len__(self) -> int:
        return len(self.x)

    def points(self):
        for x, y, p in zip(self.x, self.y, self.p):
            yield Point3(x, y, p, self.origin.params)


def _rk4(rhs, x0: float, state: np.ndarray, x_end: float, steps: int) -> tuple[np.ndarray, np.ndarray, float]:
    h = (x_end - x0) / steps
    xs = x0 + h * np.arange(steps + 1)
    out = np.empty((steps + 1, len(state)))
    out[0] = state
    s = state.astype(float)
    for i in range(steps):
        x = xs[i]
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = rhs(x, s)
            k2 = rhs(x + h / 2, s + h / 2 * k1)
            k3 = rhs(x + h / 2, s + h / 2 * k2)
            k4 = rhs(x + h, s + h * k3)
            s = s + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(s)):
            raise IntegrationError(f"state became non-finite near x={xs[i + 1]:g}", xs[i + 1])
        out[i + 1] = s
    return xs, out, h


def integrate_ode(ode: SecondOrderOde, origin: Point3 | tuple[float, float, float], x_end: float,
                  steps: int = 1024) -> Trajectory:
    """Classical RK4 on y' = p, p' = -(a1*p + a0)/a2."""
    if steps < 16:
        raise ValueError("use at least 16 steps")
    if not isinstance(origin, Point3):
        origin = ode.point(*origin)
    if x_end == origin.x:
        raise ValueError("empty integration interval")
    a2, a1, a0 = (compile_expr(a) for a in ode.coefficients)
    env = ode.params

    def rhs(x: float, s: np.ndarray) -> np.ndarray:
        y, p = s
        try:
            lead = a2(x, y, p, env)
            if abs(lead) < A2_GUARD:
                raise IntegrationError(f"a2 vanishes ({lead:.3g}) at x={x:g}", x)
            return np.array([p, -(a1(x, y, p, env) * p + a0(x, y, p, env)) / lead])
        except EvaluationError as err:
            raise IntegrationError(f"coefficient evaluation failed at x={x:g}: {err}", x) from None

    xs, states, h = _rk4(rhs, origin.x, np.array([origin.y, origin.p]), x_end, steps)
    return Trajectory(xs, states[:, 0], states[:, 1], h, Point3(origin.x, origin.y, origin.p, env))


@dataclass(frozen=True)
class ConstancyReport:
    psi0: float
    max_drift: float
    drift: np.ndarray

    def as_dict(self) -> dict:
        return {"psi0": self.psi0, "max_drift": self.max_drift}


def check_constancy(fi: FirstIntegral, trajectory: Trajectory) -> ConstancyReport:
    values = np.array([fi(pt) for pt in trajectory.points()])
    drift = np.abs(values - values[0])
    return ConstancyReport(float(values[0]), float(drift.max()), drift)


def cross_check_reduction(ode: SecondOrderOde, reduced: ReducedOde, origin: Point3 | tuple[float, float, float],
                          x_end: float, steps: int = 1024) -> float:
    """Max |y| discrepancy between RK4 on y' = f(x, y) and RK4 on the original equation."""
    if reduced.explicit is None:
        raise ValueError("reduction has no explicit form p = f(x, y)")
    if not isinstance(origin, Point3):
        origin = ode.point(*origin)
    env = dict(ode.params)
    env["c"] = reduced.c if reduced.c is not None else reduced.first_integral(origin)
    f = compile_expr(reduced.explicit)
    p0 = f(origin.x, origin.y, 0.0, env)
    if not math.isclose(p0, origin.p, rel_tol=1e-9, abs_tol=1e-9):
        raise ValueError(f"origin slope {origin.p:g} disagrees with the reduced equation ({p0:g})")

    def rhs(x: float, s: np.ndarray) -> np.ndarray:
        try:
            return np.array([f(x, s[0], 0.0, env)])
        except EvaluationError as err:
            raise IntegrationError(f"reduced slope failed at x={x:g}: {err}", x) from None

    _, first_order, _ = _rk4(rhs, origin.x, np.array([origin.y]), x_end, steps)
    second_order = integrate_ode(ode, origin, x_end, steps)
    return float(np.max(np.abs(first_order[:, 0] - second_order.y)))
