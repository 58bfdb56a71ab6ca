"""Closed-form optimal lumped-control profiles and their degeneracies.

For a fixed-in-space control profile g with unit norm, the max-min design
value is (sum_j 1/gamma_j)^(-1), attained exactly when the weighted squared
Fourier coefficients gamma_j |g_j|^2 are all equal to the value.  Arithmetic
is generic: pass floats for speed or mpmath values when the weights exceed
double range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import ValidationError
from .geometry import IntervalUnion

PI = math.pi


@dataclass(frozen=True)
class LumpedProfile:
    """Positive representative of the optimal profile (phases are free)."""

    coefficients: tuple
    value: object  # same numeric type as the input weights

    @property
    def M(self) -> int:
        return len(self.coefficients)


def solve_lumped(gamma: Sequence) -> LumpedProfile:
    """Optimal unit-norm profile for weights gamma: g_j = sqrt(value/gamma_j)."""
    if len(gamma) == 0:
        raise ValidationError("need at least one weight")
    if any(g <= 0 for g in gamma):
        raise ValidationError("weights must be positive")
    value = 1 / sum(1 / g for g in gamma)
    coeffs = tuple((value / g) ** 0.5 for g in gamma)
    return LumpedProfile(coefficients=coeffs, value=value)


def verify_equalization(profile: LumpedProfile, gamma: Sequence):
    """Largest deviation of gamma_j g_j^2 from the value (zero at the optimum)."""
    if len(gamma) != profile.M:
        raise ValidationError("weight count does not match the profile")
    return max(abs(g * c * c - profile.value)
               for g, c in zip(gamma, profile.coefficients))


@dataclass(frozen=True)
class SummabilityReport:
    partial: float
    tail_ratio: float
    ok: bool


def summability_diagnostic(gamma: Sequence, M: int) -> SummabilityReport:
    """Partial sum of the reciprocal weights and its last-term decay ratio.

    ok means the last reciprocal terms still shrink geometrically, the regime
    in which truncating the infinite sum is harmless.
    """
    if M < 3:
        raise ValidationError(f"M must be >= 3, got {M}")
    if len(gamma) < M:
        raise ValidationError(f"need at least {M} weights, got {len(gamma)}")
    inv = [1 / g for g in gamma[:M]]
    partial = float(sum(inv))
    ratio = float(inv[-1] / inv[-2])
    return SummabilityReport(partial=partial, tail_ratio=ratio, ok=ratio < 1.0)


def _rational_multiple(x: float, q_max: int, tol: float) -> bool:
    frac = x / PI
    for q in range(1, q_max + 1):
        if abs(frac * q - round(frac * q)) <= tol * q:
            return True
    return False


def rational_degeneracy(omega: IntervalUnion, J_max: int,
                        q_max: int = 64, tol: float = 1e-12) -> int | None:
    """First mode whose plain sine integral over omega vanishes, or None.

    Requires every endpoint to be a rational multiple of pi with denominator
    at most q_max; on such unions the infimum of the weighted lumped criterion
    restricted to indicator profiles collapses to zero.
    """
    if J_max < 1:
        raise ValidationError(f"J_max must be >= 1, got {J_max}")
    for a, b in omega:
        for endpoint in (a, b):
            if not _rational_multiple(endpoint, q_max, tol):
                raise ValidationError(
                    f"endpoint {endpoint} is not a rational multiple of pi "
                    f"with denominator <= {q_max}")
    for j in range(1, J_max + 1):
        integral = sum((math.cos(j * a) - math.cos(j * b)) / j for a, b in omega)
        if abs(integral) <= tol:
            return j
    return None
