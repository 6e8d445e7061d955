"""Worked equations shared by the tests and the experiment scripts."""

from __future__ import annotations

from .exactness import SecondOrderOde

# 3*eps*y'' + y*y' = 0 (plane jet); first integral y^2/2 + 3*eps*y'
JET = SecondOrderOde.parse("3*eps", "y", "0", {"eps": 1.0})

# y'' + 12*x*y^3*y' + (3*y^4 - 1) = 0, y(0) = 2, y'(0) = 0
IVP = SecondOrderOde.parse("1", "12*x*y^3", "3*y^4 - 1")
IVP_ORIGIN = (0.0, 2.0, 0.0)

# x*y*(2x + y)*y'' + (x^2 + x*y)*y' + (3*x*y + y^2) = 0, factor 1/(x*y*(2x + y))
MIXED = SecondOrderOde.parse("x*y*(2*x + y)", "x^2 + x*y", "3*x*y + y^2")
MIXED_MU = "1/(x*y*(2*x + y))"
MIXED_PSI = "p + ln(x) + ln(y)/2 + ln(2*x + y)/2"
# same shape with a full ln(y) term; not conserved, kept as a negative control
MIXED_PSI_FULL_LN = "p + ln(x*y*sqrt(y + 2*x))"

# (1 + y^2)*y*y'' + g(y)*y' + (1 + y^2)*y = 0 with g(y) = y; factor 1/(y*(1 + y^2))
ODD_G = SecondOrderOde.parse("(1 + y^2)*y", "y", "(1 + y^2)*y")
ODD_G_MU = "1/(y*(1 + y^2))"

# y'' + x*y = 0: obstruction x, no factor of any covered form
AIRY = SecondOrderOde.parse("1", "0", "x*y")

FREE = SecondOrderOde.parse("1", "0", "0")
HARMONIC = SecondOrderOde.parse("1", "0", "y")
