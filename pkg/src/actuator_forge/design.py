"""Truncated max-min actuator design: solver, stationarity scan, certificates.

The truncated criterion is the minimum over the first N modes of
gamma_j * integral of phi_j^2 over the domain, maximized over interval unions
of measure L*pi.  By the minimax exchange this equals the minimum over simplex
weights alpha of B(alpha) = sum_j alpha_j gamma_j mass_j(bathtub set of the
weighted combination), a convex function whose subgradient is the vector of
weighted masses.  The solver runs projected subgradient descent with best
iterate tracking, then polishes the detected active set with a damped Newton
equalization, which certifies the saddle conditions to near machine accuracy.

Weights are normalized internally by their maximum over the first N modes (the
argmax is invariant under common scaling); modes whose weight is so large that
they can never attain the minimum on any admissible domain are pruned up front
using the j-uniform mass floor L - sin(L*pi)/pi.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np
from mpmath import mp

from .biortho import BiorthogonalFamily, build_biorthogonal, DEFAULT_PRECISION_BITS
from .errors import ValidationError
from .geometry import (BathtubResult, IntervalUnion, ModeCombination, bathtub,
                       measure, symdiff_measure)
from .spectrum import SpectralFamily, mode_masses

PI = math.pi

DEFAULT_M_MARGIN = 8  # truncation serves design at M = N + margin


def mass_floor(L: float) -> float:
    """Least possible mass of any mode on any domain of measure L*pi.

    The minimizing set concentrates around the zeros of sin(jx); the value is
    independent of the mode index.
    """
    return L - math.sin(L * PI) / PI


@dataclass(frozen=True)
class SimplexWeights:
    values: tuple[float, ...]

    def __post_init__(self):
        v = self.values
        if any(x < -1e-12 for x in v):
            raise ValidationError("simplex weights must be nonnegative")
        if abs(sum(v) - 1.0) > 1e-12:
            raise ValidationError(f"simplex weights must sum to 1, got {sum(v)}")

    @classmethod
    def from_array(cls, arr) -> "SimplexWeights":
        return cls(tuple(max(float(x), 0.0) for x in arr))

    def as_array(self) -> np.ndarray:
        return np.array(self.values)


@dataclass(frozen=True)
class Certificate:
    checked_to: int
    tail_min: float
    certified: bool
    analytic_floor: float
    extrapolation_certified: bool  # heuristic: weight floor already beats J at J_max


@dataclass
class DesignProblem:
    """Truncated design problem at order N backed by a biorthogonal family with M >= N."""

    family: SpectralFamily
    T: float
    L: float
    N: int
    bio: BiorthogonalFamily
    gamma_scale: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.L < 1.0):
            raise ValidationError(f"L must lie in (0, 1), got {self.L}")
        if self.N < 1:
            raise ValidationError(f"N must be >= 1, got {self.N}")
        if self.N > self.bio.M:
            raise ValidationError(
                f"truncation N={self.N} exceeds biorthogonal size M={self.bio.M}")
        if not (self.gamma_scale > 0.0):
            raise ValidationError("gamma_scale must be positive")

    @classmethod
    def assemble(cls, family: SpectralFamily, T: float, L: float, N: int,
                 M: int | None = None,
                 precision_bits: int = DEFAULT_PRECISION_BITS) -> "DesignProblem":
        bio = build_biorthogonal(family, M or N + DEFAULT_M_MARGIN, T,
                                 precision_bits=precision_bits)
        return cls(family=family, T=T, L=L, N=N, bio=bio)

    @property
    def gamma(self) -> np.ndarray:
        """Float view of the first N weights (inf above double range)."""
        return np.array([self.gamma_value(j) for j in range(1, self.N + 1)])

    def gamma_value(self, j: int) -> float:
        with mp.workprec(self.bio.gram.precision_bits):
            return float(mp.mpf(self.gamma_scale) * self.bio.gamma_mp(j))

    def scaled(self, c: float) -> "DesignProblem":
        return replace(self, gamma_scale=self.gamma_scale * c)

    def normalized_gamma(self) -> np.ndarray:
        """gamma_j / max_k gamma_k over j <= N, computed at working precision."""
        with mp.workprec(self.bio.gram.precision_bits):
            g = [self.bio.gamma_mp(j) for j in range(1, self.N + 1)]
            gmax = max(g)
            return np.array([float(v / gmax) for v in g])

    def value_from_normalized(self, value_normalized: float) -> float:
        with mp.workprec(self.bio.gram.precision_bits):
            gmax = max(self.bio.gamma_mp(j) for j in range(1, self.N + 1))
            return float(mp.mpf(value_normalized) * gmax * mp.mpf(self.gamma_scale))


@dataclass
class DesignResult:
    alpha: SimplexWeights
    omega: IntervalUnion
    value: float
    mode_values: np.ndarray
    active_set: tuple[int, ...]
    iterations: int
    equalization_gap: float
    converged: bool
    level: float
    certificate: Certificate | None = None


def j_trunc(problem: DesignProblem, omega: IntervalUnion) -> float:
    """Truncated criterion min_{j<=N} gamma_j * mass_j(omega)."""
    masses = mode_masses(range(1, problem.N + 1), omega)
    with mp.workprec(problem.bio.gram.precision_bits):
        vals = [mp.mpf(problem.gamma_scale) * problem.bio.gamma_mp(j) * mp.mpf(float(m))
                for j, m in zip(range(1, problem.N + 1), masses)]
        return float(min(vals))


@dataclass
class SolverConfig:
    max_iter: int = 5000
    step_c: float | None = None   # default scales to the first subgradient
    tol: float = 1e-5             # relative equalization gap on the active set
    active_tol: float = 1e-6
    polish: bool = True
    loose_measure_tol: float = 1e-8   # bathtub tolerance during iterations
    final_measure_tol: float = 1e-10  # bathtub tolerance of the returned set


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    n = len(v)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, n + 1)
    cond = u - css / idx > 0
    rho = idx[cond][-1]
    tau = css[rho - 1] / rho
    return np.maximum(v - tau, 0.0)


class _Trial(NamedTuple):
    value: float           # min of normalized mode values
    alpha: np.ndarray      # weights over the candidate modes
    omega: IntervalUnion
    level: float
    values: np.ndarray     # normalized mode values on the candidates


def _evaluate(alpha_c: np.ndarray, cand: np.ndarray, gtil: np.ndarray, N: int,
              L: float, measure_tol: float, level_hint: float | None) -> _Trial:
    w = np.zeros(N)
    w[cand] = alpha_c * gtil[cand]
    omega, level = bathtub(ModeCombination.from_weights(w), L,
                           measure_tol=measure_tol, level_hint=level_hint)
    masses = mode_masses(cand + 1, omega)
    values = gtil[cand] * masses
    return _Trial(float(values.min()), alpha_c, omega, level, values)


def _equalize_newton(alpha_c: np.ndarray, active: np.ndarray, cand: np.ndarray,
                     gtil: np.ndarray, N: int, L: float, measure_tol: float,
                     level_hint: float | None) -> tuple[np.ndarray, _Trial] | None:
    """Damped Newton iteration equalizing the active mode values on the simplex.

    active indexes into the candidate list.  Returns None if the iteration
    leaves the simplex or stalls; the caller shrinks the active set and
    retries.
    """
    m = len(active)
    x = alpha_c[active] / alpha_c[active].sum()
    hint = level_hint

    def evaluate(xa: np.ndarray) -> _Trial:
        a = np.zeros(len(cand))
        a[active] = xa
        return _evaluate(a, cand, gtil, N, L, measure_tol, hint)

    trial = evaluate(x)
    hint = trial.level
    if m == 1:
        return x, trial

    def residual(t: _Trial) -> np.ndarray:
        va = t.values[active]
        return va[1:] - va[0]

    res = residual(trial)
    scale = max(trial.values[active].mean(), 1e-300)
    for _ in range(24):
        if np.max(np.abs(res)) <= 1e-13 * scale:
            break
        # One-sided finite-difference Jacobian in the reduced coordinates
        # (free variables x[1:], with x[0] absorbing the simplex constraint).
        h = 1e-7
        jac = np.empty((m - 1, m - 1))
        for i in range(1, m):
            xp = x.copy()
            xp[i] += h
            xp[0] -= h
            if xp[0] <= 0:
                return None
            jac[:, i - 1] = (residual(evaluate(xp)) - res) / h
        try:
            dz = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            return None
        step = 1.0
        for _bt in range(20):
            xn = x.copy()
            xn[1:] += step * dz
            xn[0] = 1.0 - xn[1:].sum()
            if np.all(xn > 0.0):
                tn = evaluate(xn)
                rn = residual(tn)
                if np.max(np.abs(rn)) < np.max(np.abs(res)):
                    x, trial, res = xn, tn, rn
                    hint = tn.level
                    break
            step *= 0.5
        else:
            return None
    if np.max(np.abs(res)) > 1e-11 * scale:
        return None
    return x, trial


def _polish(alpha_c: np.ndarray, cand: np.ndarray, gtil: np.ndarray, N: int,
            L: float, cfg: SolverConfig, level_hint: float | None) -> _Trial | None:
    """Equalize the detected active set and verify the saddle conditions.

    Accepts only if the equalized value is also the global minimum over all
    candidate modes (the remaining modes sit above it), which together with
    nonnegativity of the weights certifies optimality of the convex problem.
    """
    order = np.argsort(-alpha_c)
    active = order[alpha_c[order] > cfg.active_tol]
    if len(active) == 0:
        active = order[:1]
    active = np.sort(active)
    for _ in range(2 * len(cand) + 2):
        out = _equalize_newton(alpha_c, active, cand, gtil, N, L,
                               cfg.final_measure_tol, level_hint)
        if out is None:
            if len(active) <= 1:
                return None
            # Drop the mode the subgradient trusted least and retry.
            weakest = active[np.argmin(alpha_c[active])]
            active = active[active != weakest]
            continue
        x, trial = out
        if np.any(x <= 0.0):
            active = active[x > 0.0]
            if len(active) == 0:
                return None
            continue
        vals = trial.values
        jstar = vals[active].mean()
        outside = np.setdiff1d(np.arange(len(cand)), active)
        violators = outside[vals[outside] < jstar * (1.0 - 1e-9)]
        if len(violators) > 0:
            active = np.sort(np.concatenate([active, violators[:1]]))
            continue
        return trial
    return None


def solve_truncated(problem: DesignProblem, config: SolverConfig | None = None) -> DesignResult:
    """Solve the truncated max-min design problem.

    Returns the best domain found, its criterion value and the saddle weights;
    converged is False when neither the equalization test nor the polish
    certificate was reached within the iteration budget.
    """
    cfg = config or SolverConfig()
    N, L = problem.N, problem.L
    gtil = problem.normalized_gamma()

    # Rigorous candidate pruning: a mode whose floor value already exceeds the
    # least weight can never attain the minimum on any admissible domain.
    floor = mass_floor(L)
    gmin = gtil.min()
    cand = np.nonzero(gtil * floor <= gmin * (1.0 + 1e-12))[0]

    n_c = len(cand)
    alpha_c = np.full(n_c, 1.0 / n_c)
    best: _Trial | None = None
    polished: _Trial | None = None
    converged = False
    step_scale = None
    hint = None
    polls = {24, 60, 150, 400, 1000, 2500}
    iterations = 0

    for t in range(1, cfg.max_iter + 1):
        iterations = t
        trial = _evaluate(alpha_c, cand, gtil, N, L, cfg.loose_measure_tol, hint)
        hint = trial.level
        if best is None or trial.value > best.value:
            best = trial
        act = alpha_c > cfg.active_tol
        gap = float(trial.values[act].max() - trial.value) if act.any() else math.inf
        if gap <= cfg.tol * trial.value:
            best = trial if trial.value >= best.value else best
            converged = True
            break
        if cfg.polish and t in polls:
            polished = _polish(alpha_c, cand, gtil, N, L, cfg, hint)
            if polished is not None:
                converged = True
                break
        g = trial.values
        if step_scale is None:
            step_scale = cfg.step_c if cfg.step_c is not None else 0.5 / max(g.max(), 1e-300)
        alpha_c = project_simplex(alpha_c - (step_scale / math.sqrt(t)) * g)

    if cfg.polish and polished is None:
        source = best.alpha if best is not None else alpha_c
        polished = _polish(source, cand, gtil, N, L, cfg, hint)
        if polished is not None and polished.value >= best.value - 1e-12:
            converged = True
    chosen = polished if polished is not None else best
    # Re-extract the returned set at the contractual measure tolerance.
    final = _evaluate(chosen.alpha, cand, gtil, N, L, cfg.final_measure_tol, chosen.level)

    alpha_full = np.zeros(N)
    alpha_full[cand] = final.alpha
    alpha_full = project_simplex(alpha_full)
    return _assemble_result(problem, alpha_full, final, iterations, converged)


def _assemble_result(problem: DesignProblem, alpha_full: np.ndarray, final: _Trial,
                     iterations: int, converged: bool) -> DesignResult:
    N = problem.N
    masses = mode_masses(range(1, N + 1), final.omega)
    with mp.workprec(problem.bio.gram.precision_bits):
        scale = mp.mpf(problem.gamma_scale)
        vals_mp = [scale * problem.bio.gamma_mp(j) * mp.mpf(float(m))
                   for j, m in zip(range(1, N + 1), masses)]
        value = float(min(vals_mp))
        mode_values = np.array([float(v) for v in vals_mp])
    active = tuple(int(j + 1) for j in range(N) if alpha_full[j] > 1e-6)
    gap = max((abs(mode_values[j - 1] - value) for j in active), default=0.0)
    return DesignResult(
        alpha=SimplexWeights.from_array(alpha_full),
        omega=final.omega,
        value=value,
        mode_values=mode_values,
        active_set=active,
        iterations=iterations,
        equalization_gap=float(gap),
        converged=converged,
        level=final.level,
    )


def brute_force_small(problem: DesignProblem, cells: int) -> tuple[float, IntervalUnion]:
    """Exhaustive cell-union oracle: best min_j gamma_j mass over equal-cell subsets.

    A lower-bound oracle for solve_truncated: cell unions are a strict subset
    of the admissible domains.
    """
    if cells < 1 or cells > 24:
        raise ValidationError(f"cells must lie in 1..24, got {cells}")
    k_float = problem.L * cells
    k = round(k_float)
    if abs(k_float - k) > 1e-9 or not (0 < k < cells):
        raise ValidationError(
            f"L*cells must be an integer in (0, cells), got {k_float}")
    if math.comb(cells, k) > 10 ** 6:
        raise ValidationError(
            f"C({cells},{k}) = {math.comb(cells, k)} exceeds the enumeration guard")
    edges = np.linspace(0.0, PI, cells + 1)
    cell_masses = np.empty((problem.N, cells))
    for c in range(cells):
        cell = IntervalUnion(((float(edges[c]), float(edges[c + 1])),))
        cell_masses[:, c] = mode_masses(range(1, problem.N + 1), cell)
    gtil = problem.normalized_gamma()
    best_val = -math.inf
    best_subset: tuple[int, ...] | None = None
    for subset in itertools.combinations(range(cells), k):
        v = float(np.min(gtil * cell_masses[:, subset].sum(axis=1)))
        if v > best_val:
            best_val = v
            best_subset = subset
    omega = IntervalUnion.from_pairs(
        (float(edges[c]), float(edges[c + 1])) for c in best_subset)
    return problem.value_from_normalized(best_val), omega


@dataclass
class StationarityReport:
    n_stat: int | None
    symdiffs: dict[tuple[int, int], float]
    omegas: dict[int, IntervalUnion]
    values: dict[int, float]
    verifiable: bool

    @property
    def found(self) -> bool:
        return self.n_stat is not None


def stationarity_scan(family: SpectralFamily, T: float, L: float,
                      N_min: int, N_max: int, tol: float = 1e-2,
                      M: int | None = None,
                      precision_bits: int = DEFAULT_PRECISION_BITS,
                      config: SolverConfig | None = None) -> StationarityReport:
    """Solve for each N in [N_min, N_max] and locate where the optimal set freezes.

    n_stat is the first N whose set matches every later one within symdiff
    tol.  All orders share one biorthogonal family (default M = N_max + 8);
    per-order truncations would perturb the weights between orders and mask
    the stationarity of the sets.
    """
    if N_min < 1 or N_max < N_min:
        raise ValidationError(f"need 1 <= N_min <= N_max, got {N_min}..{N_max}")
    if M is None:
        M = N_max + DEFAULT_M_MARGIN
    if N_max > M - 1:
        raise ValidationError(f"need N_max <= M - 1, got N_max={N_max}, M={M}")
    bio = build_biorthogonal(family, M, T, precision_bits=precision_bits)
    omegas: dict[int, IntervalUnion] = {}
    values: dict[int, float] = {}
    for N in range(N_min, N_max + 1):
        problem = DesignProblem(family=family, T=T, L=L, N=N, bio=bio)
        result = solve_truncated(problem, config)
        omegas[N] = result.omega
        values[N] = result.value
    symdiffs = {
        (n1, n2): symdiff_measure(omegas[n1], omegas[n2])
        for n1 in range(N_min, N_max + 1)
        for n2 in range(n1 + 1, N_max + 1)
    }
    if N_min == N_max:
        return StationarityReport(N_min, symdiffs, omegas, values, verifiable=False)
    n_stat = None
    for N in range(N_min, N_max):
        if all(symdiffs[(N, N2)] <= tol for N2 in range(N + 1, N_max + 1)):
            n_stat = N
            break
    return StationarityReport(n_stat, symdiffs, omegas, values, verifiable=True)


def tail_certificate(result: DesignResult, bio: BiorthogonalFamily,
                     J_max: int, gamma_scale: float = 1.0) -> Certificate:
    """Finite global-optimality check: every tail mode up to J_max beats the value.

    If min_{N<j<=J_max} gamma_j mass_j(omega) >= J_N then no mode beyond the
    truncation can lower the criterion up to J_max; the extrapolation flag
    additionally reports the heuristic floor test at J_max.  The truncation
    order and measure fraction are read off the result itself.
    """
    N = len(result.mode_values)
    if J_max <= N:
        raise ValidationError(f"J_max must exceed N={N}, got {J_max}")
    if J_max > bio.M:
        raise ValidationError(f"J_max={J_max} exceeds biorthogonal size M={bio.M}")
    tail_js = range(N + 1, J_max + 1)
    masses = mode_masses(tail_js, result.omega)
    floor = mass_floor(measure(result.omega) / PI)
    with mp.workprec(bio.gram.precision_bits):
        scale = mp.mpf(gamma_scale)
        tail_vals = [scale * bio.gamma_mp(j) * mp.mpf(float(m))
                     for j, m in zip(tail_js, masses)]
        tail_min = float(min(tail_vals))
        extrapolation = float(scale * bio.gamma_mp(J_max) * mp.mpf(floor)) >= result.value
    return Certificate(
        checked_to=J_max,
        tail_min=tail_min,
        certified=tail_min >= result.value,
        analytic_floor=floor,
        extrapolation_certified=extrapolation,
    )


def estimate_N0_bound(bio: BiorthogonalFamily, L: float, T: float,
                      cap: int) -> int | None:
    """Smallest order past which the norm growth bound certifies stationarity.

    Checks, for the heat family only, whether
    |theta_j|^2 <= e^2 (pi L - sin(pi L)) / 128 * exp(2 T (j^2 - 1))
    holds for every j strictly beyond the returned order, up to cap.  Returns
    None when the inequality still fails at cap itself (nothing certified).
    """
    if not (0.0 < L < 1.0):
        raise ValidationError(f"L must lie in (0, 1), got {L}")
    if cap < 1 or cap > bio.M:
        raise ValidationError(f"cap must lie in 1..M={bio.M}, got {cap}")
    expected = np.arange(1, bio.M + 1, dtype=float) ** 2
    if not np.allclose(bio.lambdas, expected, rtol=1e-9, atol=0.0):
        raise ValidationError("the stationarity order bound supports the heat family only")
    if abs(T - bio.T) > 1e-12 * max(1.0, abs(T)):
        raise ValidationError(f"T={T} does not match the family horizon {bio.T}")
    with mp.workprec(bio.gram.precision_bits):
        const = mp.e ** 2 * (mp.pi * L - mp.sin(mp.pi * L)) / 128
        failing = [j for j in range(1, cap + 1)
                   if bio.norm_sq_mp(j) > const * mp.exp(2 * mp.mpf(T) * (j * j - 1))]
    if failing and failing[-1] == cap:
        return None
    return max(failing, default=1)
