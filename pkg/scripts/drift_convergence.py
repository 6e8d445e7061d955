"""First-integral drift against RK4 step count for the exact worked equations.

Drift should fall by roughly 16x per halving of h until it meets round-off.

    python3 scripts/drift_convergence.py [--min-steps 16] [--levels 8]
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass


from exactode.exactness import build_first_integral
from exactode.fixtures import IVP, JET, MIXED, MIXED_MU
from exactode.parser import parse
from exactode.verify import check_constancy, integrate_ode


@dataclass(frozen=True)
class SweepConfig:
    min_steps: int = 16
    levels: int = 8


SWEEPS = {
    "jet": (JET, JET, (0.0, 1.0, 0.5), 2.0),
    "ivp": (IVP, IVP, (0.0, 2.0, 0.0), 0.5),
    "mixed": (MIXED, MIXED.scaled(parse(MIXED_MU)), (1.0, 1.0, 0.0), 2.0),
}


def sweep(cfg: SweepConfig) -> dict[str, list[tuple[int, float]]]:
    out = {}
    for name, (ode, exact, origin, x_end) in SWEEPS.items():
        fi = build_first_integral(exact, origin)
        rows = []
        for level in range(cfg.levels):
            steps = cfg.min_steps * 2**level
            rows.append((steps, check_constancy(fi, integrate_ode(ode, origin, x_end, steps)).max_drift))
        out[name] = rows
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--min-steps", type=int, default=SweepConfig.min_steps)
    ap.add_argument("--levels", type=int, default=SweepConfig.levels)
    args = ap.parse_args()
    for name, rows in sweep(SweepConfig(args.min_steps, args.levels)).items():
        print(name)
        prev = None
        for steps, drift in rows:
            ratio = "" if prev is None or drift == 0 else f"  ratio {prev / drift:6.2f}"
            print(f"  steps {steps:6d}  drift {drift:.3e}{ratio}")
            prev = drift if drift > 0 else None


if __name__ == "__main__":
    main()
