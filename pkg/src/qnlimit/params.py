"""Admissible scaling exponents and related guards."""

from __future__ import annotations

TWO_THIRDS = 2.0 / 3.0
_EPS = 1e-12


def validate_S(a, b):
    """Membership of (a, b) in the admissible parameter set.

    Returns ``(ok, reason)``. The set is
    ``{2/3 <= a <= 1, 2/3 <= b <= 1}`` together with
    ``{4 - 5b <= a <= 1, 3/5 <= b < 2/3}``; a small absolute slack absorbs
    rounding in values such as 2/3 typed as 0.6666666666666666.
    """
    a, b = float(a), float(b)
    if TWO_THIRDS - _EPS <= b <= 1.0 + _EPS:
        if TWO_THIRDS - _EPS <= a <= 1.0 + _EPS:
            return True, "2/3 <= a <= 1 with 2/3 <= b <= 1"
        return False, f"a={a:g} violates 2/3 <= a <= 1 (required when 2/3 <= b <= 1)"
    if 0.6 - _EPS <= b < TWO_THIRDS:
        lo = 4.0 - 5.0 * b
        if lo - _EPS <= a <= 1.0 + _EPS:
            return True, f"4 - 5b = {lo:g} <= a <= 1 with 3/5 <= b < 2/3"
        return False, f"a={a:g} violates 4 - 5b = {lo:g} <= a <= 1 (required when 3/5 <= b < 2/3)"
    return False, f"b={b:g} outside [3/5, 1]; admissible (a, b) need 3/5 <= b <= 1"


def rate_exponent(a):
    """Exponent 3/5 - 2a/5 of the convergence rate (also the delta exponent)."""
    return 0.6 - 0.4 * float(a)
