"""Truncated minimal-norm biorthogonal families to decaying exponentials on (0, T).

theta_j is the minimal-L2-norm element of span{exp(-lambda_m t)} that is
biorthogonal to the first M exponentials; its coefficients are the rows of the
Gram inverse, its squared norm the corresponding diagonal entry.  Gram matrices
of exponentials are catastrophically ill conditioned (double precision fails
beyond M of about 6 to 8), so assembly and inversion run under mpmath at a
configurable precision with a mandatory post-solve residual check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from mpmath import mp

from .errors import PrecisionError, ValidationError
from .spectrum import SpectralFamily, eigenvalue

DEFAULT_PRECISION_BITS = 512
GRAM_RESIDUAL_TOL = 1e-30
BIORTHO_RESIDUAL_TOL = 1e-20


def gram_entry(lam_j: float, lam_k: float, T: float) -> float:
    """Closed form of the integral of exp(-(lam_j+lam_k) t) over (0, T)."""
    s = lam_j + lam_k
    if s <= 0.0:
        raise ValidationError(f"eigenvalue sum must be positive, got {s}")
    if T <= 0.0:
        raise ValidationError(f"T must be positive, got {T}")
    return -math.expm1(-s * T) / s


def _gram_entry_mp(lam_j, lam_k, T):
    s = lam_j + lam_k
    return -mp.expm1(-s * T) / s


@dataclass
class GramSystem:
    """Gram matrix of (exp(-lambda_j t))_{j<=M} on (0, T) and its inverse."""

    T: float
    lambdas: np.ndarray
    precision_bits: int
    matrix: "mp.matrix"
    inverse: "mp.matrix"
    residual: float

    @property
    def M(self) -> int:
        return len(self.lambdas)


@dataclass
class BiorthogonalFamily:
    """Minimal-norm biorthogonal family in the span of the first M exponentials.

    theta_j(s) = sum_m coeffs[j, m] * exp(-lambda_m s); the L2(0,T) inner
    products of the thetas are the Gram-inverse entries.
    """

    family: SpectralFamily
    gram: GramSystem
    _norms_mp: list = field(repr=False, default_factory=list)

    @property
    def M(self) -> int:
        return self.gram.M

    @property
    def T(self) -> float:
        return self.gram.T

    @property
    def lambdas(self) -> np.ndarray:
        return self.gram.lambdas

    @property
    def coeffs(self) -> np.ndarray:
        """theta expansion coefficients as floats (row j gives theta_{j+1})."""
        M = self.M
        out = np.empty((M, M), dtype=float)
        for j in range(M):
            for m in range(M):
                out[j, m] = float(self.gram.inverse[j, m])
        return out

    @property
    def norms_sq(self) -> np.ndarray:
        """Squared L2 norms of the thetas as floats (inf if above double range)."""
        return np.array([float(v) for v in self._norms_mp])

    def norm_sq_mp(self, j: int):
        """Exact squared norm of theta_j at working precision (1-based j)."""
        self._check_index(j)
        return self._norms_mp[j - 1]

    def inner_mp(self, j: int, k: int):
        """L2(0,T) inner product of theta_j and theta_k (1-based)."""
        self._check_index(j)
        self._check_index(k)
        return self.gram.inverse[j - 1, k - 1]

    def gamma_mp(self, j: int):
        """Design weight exp(2 lambda_j T) / |theta_j|^2 at working precision."""
        self._check_index(j)
        with mp.workprec(self.gram.precision_bits):
            lam = mp.mpf(float(self.lambdas[j - 1]))
            return mp.exp(2 * lam * mp.mpf(self.T)) / self._norms_mp[j - 1]

    def _check_index(self, j: int) -> None:
        if not (1 <= j <= self.M):
            raise IndexError(f"mode index {j} outside 1..{self.M}")


def build_biorthogonal(family: SpectralFamily, M: int, T: float,
                       precision_bits: int = DEFAULT_PRECISION_BITS,
                       residual_tol: float = GRAM_RESIDUAL_TOL) -> BiorthogonalFamily:
    """Assemble and invert the Gram system at extended precision.

    Raises PrecisionError (naming the achieved residual) if the inverse does
    not reproduce the identity to residual_tol, or if the implied
    biorthogonality defect exceeds BIORTHO_RESIDUAL_TOL.
    """
    if M < 1:
        raise ValidationError(f"M must be >= 1, got {M}")
    if T <= 0.0:
        raise ValidationError(f"T must be positive, got {T}")
    if precision_bits < 64:
        raise ValidationError(f"precision_bits must be >= 64, got {precision_bits}")
    lambdas = np.array([eigenvalue(family, j) for j in range(1, M + 1)], dtype=float)
    with mp.workprec(precision_bits):
        T_mp = mp.mpf(T)
        lam_mp = [mp.mpf(float(v)) for v in lambdas]
        G = mp.matrix(M, M)
        for j in range(M):
            for k in range(j, M):
                G[j, k] = G[k, j] = _gram_entry_mp(lam_mp[j], lam_mp[k], T_mp)
        try:
            Ginv = _spd_inverse(G, M)
        except ZeroDivisionError as exc:
            raise PrecisionError(
                f"Gram inversion broke down at M={M}, T={T}, {precision_bits} bits; "
                "increase the precision") from exc
        R = G * Ginv
        residual = 0.0
        for j in range(M):
            for k in range(M):
                entry = abs(R[j, k] - (1 if j == k else 0))
                if entry > residual:
                    residual = float(entry)
        if residual > residual_tol:
            raise PrecisionError(
                f"Gram residual {residual:.3e} exceeds tolerance {residual_tol:.1e} "
                f"at {precision_bits} bits; increase the precision")
        if residual > BIORTHO_RESIDUAL_TOL:
            raise PrecisionError(
                f"biorthogonality residual {residual:.3e} exceeds "
                f"{BIORTHO_RESIDUAL_TOL:.1e} at {precision_bits} bits")
        norms = [Ginv[j, j] for j in range(M)]
    gram = GramSystem(T=float(T), lambdas=lambdas, precision_bits=precision_bits,
                      matrix=G, inverse=Ginv, residual=residual)
    return BiorthogonalFamily(family=family, gram=gram, _norms_mp=norms)


def _spd_inverse(G, M: int):
    """Inverse of a symmetric positive definite mp.matrix via Cholesky solves."""
    mp.cholesky(G)  # raises if not numerically positive definite
    inv = mp.matrix(M, M)
    for k in range(M):
        e = mp.matrix(M, 1)
        e[k] = mp.mpf(1)
        col = mp.cholesky_solve(G, e)
        for j in range(M):
            inv[j, k] = col[j]
    return inv


def gamma_weight(bio: BiorthogonalFamily, j: int) -> float:
    """Design weight exp(2 lambda_j T)/|theta_j|^2 as a float.

    Returns inf when the exact value exceeds double range; gamma_mp on the
    family keeps the full-precision value.
    """
    return float(bio.gamma_mp(j))


def biorthogonality_residual(bio: BiorthogonalFamily) -> float:
    """Max defect of the biorthogonality relations, recomputed from the coefficients."""
    gram = bio.gram
    M = gram.M
    with mp.workprec(gram.precision_bits):
        worst = mp.mpf(0)
        R = gram.matrix * gram.inverse
        for j in range(M):
            for k in range(M):
                d = abs(R[j, k] - (1 if j == k else 0))
                if d > worst:
                    worst = d
        return float(worst)


class ConvergenceReport(NamedTuple):
    m_star: int
    norm_sq: float
    converged: bool
    history: tuple[float, ...]


def converge_in_M(family: SpectralFamily, j: int, T: float,
                  M_start: int, M_max: int, rtol: float,
                  precision_bits: int = DEFAULT_PRECISION_BITS) -> ConvergenceReport:
    """Grow the truncation until |theta_j|^2 stabilizes to relative tolerance rtol.

    The squared norms are nondecreasing in M; in the divergent regime they
    grow without stabilizing and the report comes back not converged.
    """
    if M_start < j:
        raise ValidationError(f"M_start must be >= j, got {M_start} < {j}")
    if M_max < M_start:
        raise ValidationError(f"M_max must be >= M_start")
    if rtol <= 0.0:
        raise ValidationError("rtol must be positive")
    history: list[float] = []
    prev_mp = None
    for M in range(M_start, M_max + 1):
        bio = build_biorthogonal(family, M, T, precision_bits=precision_bits)
        cur = bio.norm_sq_mp(j)
        history.append(float(cur))
        if prev_mp is not None:
            with mp.workprec(precision_bits):
                if abs(cur - prev_mp) <= mp.mpf(rtol) * prev_mp:
                    return ConvergenceReport(M - 1, float(prev_mp), True, tuple(history))
        prev_mp = cur
    return ConvergenceReport(M_max, float(prev_mp), False, tuple(history))


class GrowthFit(NamedTuple):
    m1: float
    m2: float
    ok: bool


def growth_fit(bio: BiorthogonalFamily) -> GrowthFit:
    """Least-squares envelope log|theta_j|^2 <= log(m1) + m2*lambda_j.

    Diagnostic only: ok means the fitted exponent sits in (0, 2T), the regime
    in which the truncated optimal domains are known to become stationary.
    """
    M = bio.M
    if M < 3:
        raise ValidationError(f"growth fit needs M >= 3, got {M}")
    with mp.workprec(bio.gram.precision_bits):
        y = np.array([float(mp.log(bio.norm_sq_mp(j))) for j in range(1, M + 1)])
    lam = bio.lambdas
    slope, intercept = (float(v) for v in np.polyfit(lam, y, 1))
    # Raise the intercept so the fit dominates every sample.
    intercept += float(np.max(y - (intercept + slope * lam)))
    m1 = math.exp(intercept) if intercept < 700 else math.inf
    ok = bool(0.0 < slope < 2.0 * bio.T)
    return GrowthFit(m1=m1, m2=slope, ok=ok)
