"""Catalog of spectral families on (0, pi) and exact mode integrals over interval unions.

All supported families share the L2-normalized sine eigenfunctions
phi_j(x) = sqrt(2/pi) sin(jx); they differ only in their eigenvalue laws.
Integrals of phi_j^2 and phi_j phi_k over interval unions are evaluated from
closed-form antiderivatives, so mode masses are exact to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import ValidationError
from .geometry import IntervalUnion

PI = math.pi


@dataclass(frozen=True)
class SineFractional:
    """Fractional power family: lambda_j = j**(2*alpha), sine eigenfunctions.

    alpha = 1 is the constant-coefficient heat family with lambda_j = j^2.
    """

    alpha: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0.0 and math.isfinite(self.alpha)):
            raise ValidationError(f"alpha must be positive, got {self.alpha}")

    def eigenvalue(self, j: int) -> float:
        return float(j) ** (2.0 * self.alpha)

    def spec_string(self) -> str:
        return f"sine-fractional:alpha={self.alpha:.17g}"


@dataclass(frozen=True)
class SinePowerLaw:
    """Power-law eigenvalue model: lambda_j = K*(j+a)**beta.

    This is a weight-model family: the eigenfunctions are declared to be the
    sines even though operators with such spectra generally have different
    eigenfunctions.  It exists to exercise weight asymptotics, not to model a
    concrete operator.
    """

    K: float
    a: float
    beta: float

    def __post_init__(self):
        if not (self.K > 0.0):
            raise ValidationError(f"K must be positive, got {self.K}")
        if not (self.a >= 0.0):
            raise ValidationError(f"a must be nonnegative, got {self.a}")
        if not (self.beta > 1.0):
            raise ValidationError(f"beta must exceed 1, got {self.beta}")

    def eigenvalue(self, j: int) -> float:
        return self.K * (j + self.a) ** self.beta

    def spec_string(self) -> str:
        return f"sine-powerlaw:K={self.K:.17g},a={self.a:.17g},beta={self.beta:.17g}"


@dataclass(frozen=True)
class ExplicitReal:
    """Explicit strictly increasing positive eigenvalue list, sine eigenfunctions."""

    lambdas: tuple[float, ...]

    def __post_init__(self):
        lam = self.lambdas
        if len(lam) == 0:
            raise ValidationError("explicit family needs at least one eigenvalue")
        if lam[0] <= 0.0 or any(b <= a for a, b in zip(lam, lam[1:])):
            raise ValidationError("eigenvalues must be strictly increasing and positive")

    def eigenvalue(self, j: int) -> float:
        if j > len(self.lambdas):
            raise ValidationError(
                f"explicit family has {len(self.lambdas)} eigenvalues, asked for j={j}")
        return self.lambdas[j - 1]

    def spec_string(self) -> str:
        return "explicit:lambda=" + ",".join(f"{v:.17g}" for v in self.lambdas)


SpectralFamily = Union[SineFractional, SinePowerLaw, ExplicitReal]

HEAT = SineFractional(1.0)


def eigenvalue(family: SpectralFamily, j: int) -> float:
    """j-th eigenvalue of the family (1-based)."""
    if j < 1:
        raise ValidationError(f"mode index must be >= 1, got {j}")
    return family.eigenvalue(j)


def _check_domain(omega: IntervalUnion) -> None:
    if omega.intervals and (omega.intervals[0][0] < -1e-12
                            or omega.intervals[-1][1] > PI + 1e-12):
        raise ValidationError("domain must be contained in [0, pi]")


def mode_mass(family: SpectralFamily, j: int, omega: IntervalUnion) -> float:
    """Integral of phi_j^2 over omega, in [0, 1]; exactly 1 on the full domain."""
    if j < 1:
        raise ValidationError(f"mode index must be >= 1, got {j}")
    _check_domain(omega)
    total = 0.0
    for a, b in omega:
        total += (b - a) / 2.0 - (math.sin(2 * j * b) - math.sin(2 * j * a)) / (4.0 * j)
    return (2.0 / PI) * total


def mode_masses(js: Sequence[int], omega: IntervalUnion) -> np.ndarray:
    """Vectorized mode_mass over several mode indices (shared sine family)."""
    _check_domain(omega)
    j = np.asarray(js, dtype=float)
    if len(omega) == 0:
        return np.zeros_like(j)
    ab = np.array(omega.intervals, dtype=float)
    lengths = float(np.sum(ab[:, 1] - ab[:, 0]))
    s = np.sin(2.0 * np.multiply.outer(j, ab))        # (len(js), k, 2)
    osc = np.sum(s[:, :, 1] - s[:, :, 0], axis=1) / (4.0 * j)
    return (2.0 / PI) * (lengths / 2.0 - osc)


def mode_cross(family: SpectralFamily, j: int, k: int, omega: IntervalUnion) -> float:
    """Integral of phi_j * phi_k over omega; symmetric, equals mode_mass when j = k."""
    if j < 1 or k < 1:
        raise ValidationError("mode indices must be >= 1")
    if j == k:
        return mode_mass(family, j, omega)
    _check_domain(omega)
    d, s = j - k, j + k
    total = 0.0
    for a, b in omega:
        total += (math.sin(d * b) - math.sin(d * a)) / (2.0 * d)
        total -= (math.sin(s * b) - math.sin(s * a)) / (2.0 * s)
    return (2.0 / PI) * total


@dataclass(frozen=True)
class MuntzReport:
    partial_sum: float
    verdict: str  # "convergent" | "divergent" | "inconclusive"


def muntz_diagnostic(family: SpectralFamily, J_max: int) -> MuntzReport:
    """Partial sum of 1/(lambda_j + shift) and the completeness verdict.

    The shift is -lambda_1 + 1 so every term is positive.  Power-law families
    get the analytic verdict (the reciprocal eigenvalue series converges iff
    the growth exponent exceeds 1); explicit lists are inconclusive.
    """
    if J_max < 2:
        raise ValidationError(f"J_max must be >= 2, got {J_max}")
    if isinstance(family, ExplicitReal):
        J_max = min(J_max, len(family.lambdas))
    lam1 = eigenvalue(family, 1)
    shift = -lam1 + 1.0
    partial = sum(1.0 / (eigenvalue(family, j) + shift) for j in range(1, J_max + 1))
    if isinstance(family, SineFractional):
        verdict = "convergent" if 2.0 * family.alpha > 1.0 else "divergent"
    elif isinstance(family, SinePowerLaw):
        verdict = "convergent" if family.beta > 1.0 else "divergent"
    else:
        verdict = "inconclusive"
    return MuntzReport(partial_sum=partial, verdict=verdict)


def parse_family(spec: str) -> SpectralFamily:
    """Parse a family specification string.

    Grammar: `sine-fractional:alpha=<float>`,
    `sine-powerlaw:K=<float>,a=<float>,beta=<float>`,
    `explicit:lambda=<comma-separated floats>`.
    """
    kind, _, rest = spec.partition(":")
    kind = kind.strip()
    try:
        if kind == "sine-fractional":
            fields = _parse_fields(rest, {"alpha"})
            return SineFractional(alpha=fields["alpha"])
        if kind == "sine-powerlaw":
            fields = _parse_fields(rest, {"K", "a", "beta"})
            return SinePowerLaw(K=fields["K"], a=fields["a"], beta=fields["beta"])
        if kind == "explicit":
            key, _, values = rest.partition("=")
            if key.strip() != "lambda" or not values:
                raise ValidationError("explicit family needs lambda=<floats>")
            lambdas = tuple(float(v) for v in values.split(","))
            return ExplicitReal(lambdas=lambdas)
    except ValidationError:
        raise
    except ValueError as exc:
        raise ValidationError(f"bad family spec {spec!r}: {exc}") from exc
    raise ValidationError(
        f"unknown family kind {kind!r}; expected sine-fractional, sine-powerlaw or explicit")


def _parse_fields(rest: str, names: set[str]) -> dict[str, float]:
    fields: dict[str, float] = {}
    for part in rest.split(","):
        key, eq, value = part.partition("=")
        key = key.strip()
        if not eq or key not in names:
            raise ValidationError(f"unexpected field {part!r}; expected {sorted(names)}")
        fields[key] = float(value)
    missing = names - fields.keys()
    if missing:
        raise ValidationError(f"missing family fields: {sorted(missing)}")
    return fields
