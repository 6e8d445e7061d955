"""Exact second-order equations a2*y'' + a1*y' + a0 = 0 and their integrating factors."""

from .algebra import equal, is_zero, simplify
from .calculus import antiderivative, differentiate, integrate_definite, integrate_symbolic
from .exactness import (Exactness, ExactnessReport, FirstIntegral, NotExactError, ReducedOde, SecondOrderOde,
                        SingularLegError, build_first_integral, check_exact, exactness_residuals, reduce)
from .expr import Expression, Point3, evaluate, to_text
from .intfactor import (MuForm, MuMiss, MuResult, Obstruction, ProductFactorSpec, find_mu_pairwise, find_mu_p,
                        find_mu_product, find_mu_x, find_mu_y, obstruction, search_mu_monomial, verify_mu)
from .parser import ParseError, parse
from .verify import Trajectory, check_constancy, cross_check_reduction, fd_partial, integrate_ode
from .zero import SamplerConfig, Verdict, ZeroVerdict, depends_only_on, is_identically_zero

__all__ = [
    "equal",
    "is_zero",
    "simplify",
    "antiderivative",
    "differentiate",
    "integrate_definite",
    "integrate_symbolic",
    "Exactness",
    "ExactnessReport",
    "FirstIntegral",
    "NotExactError",
    "ReducedOde",
    "SecondOrderOde",
    "SingularLegError",
    "build_first_integral",
    "check_exact",
    "exactness_residuals",
    "reduce",
    "Expression",
    "Point3",
    "evaluate",
    "to_text",
    "MuForm",
    "MuMiss",
    "MuResult",
    "Obstruction",
    "ProductFactorSpec",
    "find_mu_pairwise",
    "find_mu_p",
    "find_mu_product",
    "find_mu_x",
    "find_mu_y",
    "obstruction",
    "search_mu_monomial",
    "verify_mu",
    "ParseError",
    "parse",
    "Trajectory",
    "check_constancy",
    "cross_check_reduction",
    "fd_partial",
    "integrate_ode",
    "SamplerConfig",
    "Verdict",
    "ZeroVerdict",
    "depends_only_on",
    "is_identically_zero",
]
