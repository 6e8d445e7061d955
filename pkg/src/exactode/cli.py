"""Command-line front end.

    exactode check     --a2 EXPR --a1 EXPR --a0 EXPR [--param name=value] [--json]
    exactode reduce    ... [--ivp x0,y0,p0] [--base x0,y0,p0] [--x-end X]
    exactode mu        ... [--range N] [--all] [--alpha A --beta B --gamma G]
    exactode verify-mu ... --mu EXPR [--ivp x0,y0,p0]
    exactode simulate  ... --ivp x0,y0,p0 [--x-end X] [--steps N]

Exit codes: 0 success (check: exact), 1 negative answer (check: not exact),
2 check undetermined (residuals only sampled to zero), 3 bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import expr as ex
from .exactness import (Exactness, NotExactError, SecondOrderOde, SingularLegError, build_first_integral,
                        check_exact, reduce)
from .intfactor import (FactorSpecError, LevelSetError, MuMiss, ProductFactorSpec, RatioUndefined,
                        find_mu_pairwise, find_mu_product, find_mu_x, find_mu_y, find_mu_p, obstruction,
                        search_mu_monomial, verify_mu)
from .parser import ParseError, parse
from .verify import IntegrationError, check_constancy, cross_check_reduction, integrate_ode
from .zero import DEFAULT_BOX, DegenerateBoxError, SamplerConfig, auto_box

EXIT_OK, EXIT_NEGATIVE, EXIT_UNDETERMINED, EXIT_INPUT = 0, 1, 2, 3

log = logging.getLogger("exactode")


class InputError(ValueError):
    pass


@dataclass
class ProblemFile:
    """Everything a command needs; loaded from JSON and overridden by flags."""

    a2: str | None = None
    a1: str = "0"
    a0: str = "0"
    params: dict[str, float] = field(default_factory=dict)
    ivp: tuple[float, float, float] | None = None
    box: tuple[tuple[float, float], ...] | None = None
    tol: float = 1e-9
    drift_tol: float = 1e-6
    seed: int = 42
    steps: int = 1024
    x_end: float | None = None
    base: tuple[float, float, float] | None = None
    mu: str | None = None
    alpha: str | None = None
    beta: str | None = None
    gamma: str | None = None

    @classmethod
    def load(cls, path: str | Path) -> ProblemFile:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as err:
            raise InputError(f"cannot read problem file {path}: {err}") from None
        if not isinstance(data, dict):
            raise InputError("problem file must hold a JSON object")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise InputError(f"unknown problem fields: {', '.join(sorted(unknown))}")
        prob = cls()
        for key, value in data.items():
            if key == "ivp" and value is not None:
                value = _triple(value, "ivp")
            elif key == "base" and value is not None:
                value = _triple(value, "base")
            elif key == "box" and value is not None:
                value = tuple((float(lo), float(hi)) for lo, hi in value)
            elif key == "params":
                value = {str(k): float(v) for k, v in value.items()}
            setattr(prob, key, value)
        return prob

    def validate(self) -> None:
        if not self.a2:
            raise InputError("a2 is required (--a2 or problem file)")
        if not self.tol > 0 or not self.drift_tol > 0:
            raise InputError("tolerances must be positive")
        if self.box is not None:
            if len(self.box) != 3:
                raise InputError("box needs three [lo, hi] ranges")
            if self.ivp is not None and not all(lo <= v <= hi for v, (lo, hi) in zip(self.ivp, self.box)):
                raise InputError("ivp lies outside the sampling box")

    def ode(self) -> SecondOrderOde:
        try:
            return SecondOrderOde(parse(self.a2), parse(self.a1), parse(self.a0), dict(self.params))
        except ParseError as err:
            raise InputError(f"bad expression: {err}") from None
        except ValueError as err:
            raise InputError(str(err)) from None

    def config(self, *exprs: ex.Expression) -> SamplerConfig:
        box = self.box or auto_box(*exprs, base=DEFAULT_BOX)
        return SamplerConfig(tol=self.tol, seed=self.seed, box=box, params=dict(self.params))

    def echo(self) -> dict:
        out = {"a2": self.a2, "a1": self.a1, "a0": self.a0, "params": dict(sorted(self.params.items())),
               "tol": self.tol, "seed": self.seed, "steps": self.steps}
        for key in ("ivp", "base", "box", "x_end", "mu", "alpha", "beta", "gamma"):
            value = getattr(self, key)
            if value is not None:
                out[key] = list(value) if isinstance(value, tuple) else value
        return out


def _triple(value, name: str) -> tuple[float, float, float]:
    if isinstance(value, str):
        value = value.split(",")
    if isinstance(value, dict):
        keys = ("x0", "y0", "p0")
        value = [value.get(k) for k in keys]
    try:
        x, y, p = (float(v) for v in value)
    except (TypeError, ValueError):
        raise InputError(f"{name} needs three numbers x0,y0,p0") from None
    return (x, y, p)


def _params(items: Sequence[str]) -> dict[str, float]:
    out = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"--param expects name=value, got {item!r}")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise InputError(f"parameter {name!r} has non-numeric value {value!r}") from None
    return out


def _problem(args: argparse.Namespace) -> ProblemFile:
    prob = ProblemFile.load(args.problem) if args.problem else ProblemFile()
    for key in ("a2", "a1", "a0", "mu", "alpha", "beta", "gamma"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(prob, key, value)
    for key in ("tol", "drift_tol", "seed", "steps", "x_end"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(prob, key, value)
    if args.ivp is not None:
        prob.ivp = _triple(args.ivp, "--ivp")
    if args.base is not None:
        prob.base = _triple(args.base, "--base")
    prob.params.update(_params(args.param))
    prob.validate()
    return prob


# ---------------------------------------------------------------------------
# commands; each returns (exit code, report)


def _ode_dict(ode: SecondOrderOde) -> dict:
    return {"a2": ex.to_text(ode.a2), "a1": ex.to_text(ode.a1), "a0": ex.to_text(ode.a0), "equation": str(ode)}


def cmd_check(prob: ProblemFile) -> tuple[int, dict]:
    ode = prob.ode()
    cfg = prob.config(*ode.coefficients)
    report = check_exact(ode, cfg)
    obs = obstruction(ode, cfg)
    out = {"command": "check", "input": prob.echo(), "ode": _ode_dict(ode), "exactness": report.as_dict(),
           "obstruction": obs.as_dict()}
    code = {Exactness.EXACT: EXIT_OK, Exactness.NOT_EXACT: EXIT_NEGATIVE,
            Exactness.SAMPLED_EXACT: EXIT_UNDETERMINED}[report.verdict]
    return code, out


def _trajectory_checks(ode: SecondOrderOde, red, prob: ProblemFile, out: dict) -> bool:
    """Integrate from the ivp and record drift (and dual-integration discrepancy); True if within tolerance."""
    x_end = prob.x_end if prob.x_end is not None else prob.ivp[0] + 1.0
    tr = integrate_ode(ode, prob.ivp, x_end, prob.steps)
    drift = check_constancy(red.first_integral, tr)
    out["trajectory"] = {"origin": list(prob.ivp), "x_end": x_end, "steps": prob.steps, **drift.as_dict(),
                         "drift_tol": prob.drift_tol, "drift_ok": drift.max_drift <= prob.drift_tol}
    ok = drift.max_drift <= prob.drift_tol
    if red.explicit is not None and ode is red.ode:
        gap = cross_check_reduction(ode, red, prob.ivp, x_end, prob.steps)
        out["trajectory"]["dual_integration_discrepancy"] = gap
    return ok


def cmd_reduce(prob: ProblemFile) -> tuple[int, dict]:
    ode = prob.ode()
    cfg = prob.config(*ode.coefficients)
    out = {"command": "reduce", "input": prob.echo(), "ode": _ode_dict(ode)}
    report = check_exact(ode, cfg)
    out["exactness"] = report.as_dict()
    if not report.is_exact:
        out["message"] = "equation is not exact; try the mu command"
        return EXIT_NEGATIVE, out
    red = reduce(ode, prob.ivp, prob.base, cfg)
    out["reduction"] = _reduction_dict(red)
    ok = True
    if prob.ivp is not None:
        ok = _trajectory_checks(ode, red, prob, out)
    return (EXIT_OK if ok else EXIT_NEGATIVE), out


def _reduction_dict(red) -> dict:
    fi = red.first_integral
    return {
        "psi": str(fi),
        "closed_form": fi.closed_form,
        "base_point": list(fi.base.coords()),
        "c": red.c,
        "implicit": red.implicit_text(),
        "explicit": red.explicit_text(),
    }


def _finders(ode: SecondOrderOde, prob: ProblemFile, cfg: SamplerConfig, bound: int):
    yield "OfX", lambda: find_mu_x(ode)
    yield "OfY", lambda: find_mu_y(ode)
    yield "OfP", lambda: find_mu_p(ode)
    yield "monomial", lambda: search_mu_monomial(ode, bound)
    if prob.alpha or prob.beta or prob.gamma:
        spec = ProductFactorSpec(*(parse(t) if t else ex.ONE for t in (prob.alpha, prob.beta, prob.gamma)))
        if sum(spec.trivial()) == 1:
            yield "pairwise", lambda: find_mu_pairwise(ode, spec)
        else:
            yield "product", lambda: find_mu_product(ode, spec)


def cmd_mu(prob: ProblemFile, bound: int = 4, run_all: bool = False) -> tuple[int, dict]:
    ode = prob.ode()
    cfg = prob.config(*ode.coefficients)
    obs = obstruction(ode, cfg)
    out = {"command": "mu", "input": prob.echo(), "ode": _ode_dict(ode), "obstruction": obs.as_dict(),
           "found": [], "missed": []}
    if obs.rules_out:
        return EXIT_NEGATIVE, out
    for name, finder in _finders(ode, prob, cfg, bound):
        try:
            result = finder()
        except (RatioUndefined, FactorSpecError, LevelSetError, DegenerateBoxError, SingularLegError) as err:
            out["missed"].append({"strategy": name, "failed_hypothesis": str(err)})
            continue
        if isinstance(result, MuMiss) or not result.is_exact:
            miss = result.as_dict() if isinstance(result, MuMiss) else {"failed_hypothesis": "scaled equation exact"}
            out["missed"].append({"strategy": name, **miss})
            continue
        out["found"].append({"strategy": name, **result.as_dict()})
        if not run_all:
            break
    if not out["found"]:
        out["suggestion"] = "no automatic strategy succeeded; supply a candidate with verify-mu --mu EXPR"
        return EXIT_NEGATIVE, out
    return EXIT_OK, out


def cmd_verify_mu(prob: ProblemFile) -> tuple[int, dict]:
    if not prob.mu:
        raise InputError("verify-mu needs --mu EXPR")
    ode = prob.ode()
    try:
        mu = parse(prob.mu)
    except ParseError as err:
        raise InputError(f"bad --mu expression: {err}") from None
    cfg = prob.config(*ode.coefficients, mu)
    try:
        result = verify_mu(ode, mu, cfg if prob.box else None)
    except ValueError as err:
        raise InputError(f"precondition failed: {err}") from None
    out = {"command": "verify-mu", "input": prob.echo(), "ode": _ode_dict(ode), "mu": result.as_dict()}
    if not result.is_exact:
        return EXIT_NEGATIVE, out
    scaled = result.scaled
    red = reduce(scaled, prob.ivp, prob.base)
    out["reduction"] = _reduction_dict(red)
    ok = True
    if prob.ivp is not None:
        ok = _trajectory_checks(ode, red, prob, out)
    return (EXIT_OK if ok else EXIT_NEGATIVE), out


def cmd_simulate(prob: ProblemFile) -> tuple[int, dict, str]:
    if prob.ivp is None:
        raise InputError("simulate needs --ivp x0,y0,p0")
    ode = prob.ode()
    x_end = prob.x_end if prob.x_end is not None else prob.ivp[0] + 1.0
    tr = integrate_ode(ode, prob.ivp, x_end, prob.steps)
    fi = None
    if check_exact(ode, prob.config(*ode.coefficients)).is_exact:
        try:
            fi = build_first_integral(ode, prob.base)
        except SingularLegError as err:
            log.info("no first integral column: %s", err)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "y", "p", "psi"] if fi else ["x", "y", "p"])
    rows = {"x": tr.x.tolist(), "y": tr.y.tolist(), "p": tr.p.tolist()}
    psi_values = [fi(pt) for pt in tr.points()] if fi else None
    if psi_values is not None:
        rows["psi"] = psi_values
    for i in range(len(tr)):
        row = [repr(float(rows[k][i])) for k in rows]
        writer.writerow(row)
    out = {"command": "simulate", "input": prob.echo(), "ode": _ode_dict(ode), "steps": prob.steps,
           "h": tr.h, "x_end": x_end, "psi": str(fi) if fi else None, "trajectory": rows}
    return EXIT_OK, out, buf.getvalue()


# ---------------------------------------------------------------------------
# rendering


def render_text(report: dict, indent: int = 0) -> str:
    lines = []
    pad = "  " * indent
    for key, value in report.items():
        if key == "trajectory" and report.get("command") == "simulate":
            continue
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.append(render_text(value, indent + 1))
        elif isinstance(value, list) and value and all(isinstance(v, dict) for v in value):
            lines.append(f"{pad}{key}:")
            for item in value:
                lines.append(render_text(item, indent + 1))
                lines.append(f"{pad}  --")
        else:
            lines.append(f"{pad}{key}: {value}")
    return "\n".join(line for line in lines if line)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--a2", help="coefficient of y''")
    common.add_argument("--a1", help="coefficient of y'")
    common.add_argument("--a0", help="free term")
    common.add_argument("--problem", help="JSON problem file; flags override its values")
    common.add_argument("--param", action="append", default=[], metavar="NAME=VALUE")
    common.add_argument("--ivp", help="initial point x0,y0,p0 (use --ivp=-1,0,0 for negatives)")
    common.add_argument("--base", help="base point of the first integral, x0,y0,p0")
    common.add_argument("--tol", type=float, help="zero-test tolerance (default 1e-9)")
    common.add_argument("--drift-tol", type=float, help="first-integral drift tolerance (default 1e-6)")
    common.add_argument("--seed", type=int)
    common.add_argument("--steps", type=int)
    common.add_argument("--x-end", type=float)
    common.add_argument("--json", action="store_true", help="machine-readable report")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="exactode", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="decide exactness and the obstruction")
    sub.add_parser("reduce", parents=[common], help="build the first integral and reduce to first order")
    mu = sub.add_parser("mu", parents=[common], help="search for an integrating factor")
    mu.add_argument("--range", type=int, default=4, help="monomial exponent bound")
    mu.add_argument("--all", action="store_true", help="run every strategy")
    mu.add_argument("--alpha", help="alpha(x) of a product-form factor")
    mu.add_argument("--beta", help="beta(y) of a product-form factor")
    mu.add_argument("--gamma", help="gamma(y') of a product-form factor")
    vm = sub.add_parser("verify-mu", parents=[common], help="check a given integrating factor")
    vm.add_argument("--mu", help="candidate integrating factor")
    sim = sub.add_parser("simulate", parents=[common], help="RK4 trajectory as CSV")
    sim.add_argument("--out", help="write CSV here instead of stdout")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        prob = _problem(args)
        csv_text = None
        if args.command == "check":
            code, report = cmd_check(prob)
        elif args.command == "reduce":
            code, report = cmd_reduce(prob)
        elif args.command == "mu":
            code, report = cmd_mu(prob, args.range, args.all)
        elif args.command == "verify-mu":
            code, report = cmd_verify_mu(prob)
        else:
            code, report, csv_text = cmd_simulate(prob)
    except (InputError, NotExactError, SingularLegError, IntegrationError, DegenerateBoxError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    if csv_text is not None and not args.json:
        if args.out:
            Path(args.out).write_text(csv_text, encoding="utf-8")
            print(render_text(report))
        else:
            sys.stdout.write(csv_text)
        return code
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print(render_text(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
