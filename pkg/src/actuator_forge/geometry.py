"""Actuator domains as interval unions, and level sets of sine-squared combinations.

Candidate domains live on (0, pi) as sorted disjoint interval unions.  The
bathtub step extracts the superlevel set of a nonnegative mode combination at
the level whose superlevel measure matches a prescribed fraction of pi; it is
the inner maximization of the design solver.  Everything here runs in standard
double precision: root abscissae are refined to 1e-13 and measures to 1e-10,
well inside double range for combinations of up to a few dozen modes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import DegenerateCombinationError, ValidationError

PI = math.pi

# Intervals shorter than this are dropped during canonicalization.
MERGE_TOL = 1e-12
# Gaps narrower than this count as one connected component.
COMPONENT_GAP_TOL = 1e-9
# Root abscissa refinement target for level-set boundaries.
ROOT_X_TOL = 1e-13
# Default measure tolerance of the bathtub level search.
BATHTUB_MEASURE_TOL = 1e-10
# A measure jump this large across a collapsed level bracket means a plateau.
PLATEAU_JUMP_TOL = 1e-6 * PI


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted union of disjoint open subintervals of [0, pi]."""

    intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        prev_end = 0.0
        for a, b in self.intervals:
            if not (math.isfinite(a) and math.isfinite(b)):
                raise ValidationError("interval endpoints must be finite")
            if a < -MERGE_TOL or b > PI + MERGE_TOL:
                raise ValidationError(
                    f"interval ({a}, {b}) lies outside [0, pi]")
            if b - a < MERGE_TOL:
                raise ValidationError(
                    f"interval ({a}, {b}) shorter than merge tolerance {MERGE_TOL}")
            if a < prev_end - MERGE_TOL:
                raise ValidationError("intervals must be sorted and disjoint")
            prev_end = b

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]]) -> "IntervalUnion":
        """Canonicalize arbitrary pairs: sort, merge overlaps, drop slivers."""
        items = sorted((float(a), float(b)) for a, b in pairs if b > a)
        merged: list[list[float]] = []
        for a, b in items:
            a = min(max(a, 0.0), PI)
            b = min(max(b, 0.0), PI)
            if merged and a <= merged[-1][1] + MERGE_TOL:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        kept = tuple((a, b) for a, b in merged if b - a >= MERGE_TOL)
        return cls(kept)

    @property
    def measure(self) -> float:
        return float(sum(b - a for a, b in self.intervals))

    @property
    def endpoints(self) -> np.ndarray:
        """Flat array a1, b1, a2, b2, ..."""
        return np.array([e for ab in self.intervals for e in ab], dtype=float)

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)


EMPTY = IntervalUnion()
FULL = IntervalUnion(((0.0, PI),))


def measure(omega: IntervalUnion) -> float:
    """Total length of the union."""
    return omega.measure


def symdiff_measure(omega1: IntervalUnion, omega2: IntervalUnion) -> float:
    """Measure of the symmetric difference, by a sorted endpoint sweep."""
    events = sorted(
        [(a, 0, 1) for a, _ in omega1] + [(b, 0, -1) for _, b in omega1]
        + [(a, 1, 1) for a, _ in omega2] + [(b, 1, -1) for _, b in omega2]
    )
    total = 0.0
    depth = [0, 0]
    prev = 0.0
    for x, which, delta in events:
        if (depth[0] > 0) != (depth[1] > 0):
            total += x - prev
        depth[which] += delta
        prev = x
    return total


def component_count(omega: IntervalUnion, gap_tol: float = COMPONENT_GAP_TOL) -> int:
    """Number of connected components after merging gaps below gap_tol."""
    count = 0
    prev_end = None
    for a, b in omega:
        if prev_end is None or a - prev_end >= gap_tol:
            count += 1
        prev_end = b
    return count


@dataclass(frozen=True)
class ModeCombination:
    """Nonnegative combination sum_j w_j * phi_j(x)^2 with phi_j = sqrt(2/pi) sin(jx)."""

    weights: tuple[float, ...]

    def __post_init__(self):
        w = self.weights
        if len(w) == 0:
            raise ValidationError("mode combination needs at least one weight")
        if any(not math.isfinite(v) or v < 0.0 for v in w):
            raise ValidationError("mode weights must be finite and nonnegative")
        if max(w) <= 0.0:
            raise ValidationError("mode combination needs at least one positive weight")

    @classmethod
    def from_weights(cls, weights: Sequence[float]) -> "ModeCombination":
        return cls(tuple(float(v) for v in weights))

    @property
    def n_modes(self) -> int:
        return len(self.weights)

    def __call__(self, x):
        j = np.arange(1, self.n_modes + 1, dtype=float)
        xs = np.asarray(x, dtype=float)
        s = np.sin(np.multiply.outer(j, xs))
        vals = (2.0 / PI) * np.tensordot(self.weights, s * s, axes=(0, 0))
        return vals if xs.ndim else float(vals)


class BathtubResult(NamedTuple):
    omega: IntervalUnion
    level: float


# Sampling grids and sine tables are reused across every level query with the
# same mode count; the solver calls the bathtub thousands of times.
_GRID_CACHE: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _grid_tables(n_modes: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    cached = _GRID_CACHE.get(n_modes)
    if cached is None:
        n_points = 64 * n_modes + 256
        x = np.linspace(0.0, PI, n_points)
        j = np.arange(1, n_modes + 1, dtype=float)
        s = np.sin(np.outer(j, x))
        d = np.sin(np.outer(2.0 * j, x))
        cached = (x, (2.0 / PI) * s * s, d)
        _GRID_CACHE[n_modes] = cached
    return cached


def _eval_weights(w: np.ndarray, x: np.ndarray) -> np.ndarray:
    j = np.arange(1, len(w) + 1, dtype=float)
    s = np.sin(np.outer(j, x))
    return (2.0 / PI) * (w @ (s * s))


def _bisect_roots(fn, lo: np.ndarray, hi: np.ndarray, lo_positive: np.ndarray) -> np.ndarray:
    """Vectorized bisection of fn on bracketing cells down to ROOT_X_TOL in x."""
    lo = lo.copy()
    hi = hi.copy()
    while np.max(hi - lo) > ROOT_X_TOL:
        mid = 0.5 * (lo + hi)
        mid_positive = fn(mid) > 0.0
        same = mid_positive == lo_positive
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


class _LevelQuery:
    """Exact superlevel extraction for one fixed combination.

    The derivative of the combination is a short sine polynomial; its zeros
    split (0, pi) into segments on which the combination is strictly monotone,
    so each segment carries at most one level crossing and none can hide
    between samples.  The critical points are located once; every level query
    afterwards enumerates crossings exactly (up to the root tolerance), and
    roots found at one level seed Newton updates at the next.
    """

    def __init__(self, w: np.ndarray):
        self.w = w
        x, table, dtable = _grid_tables(len(w))
        self._j = np.arange(1, len(w) + 1, dtype=float)
        self._deriv_coeff = (2.0 / PI) * w * self._j

        dv = dtable.T @ self._deriv_coeff
        sign = dv > 0.0
        flips = np.nonzero(sign[:-1] != sign[1:])[0]
        if len(flips):
            roots = _bisect_roots(self._deriv, x[flips], x[flips + 1], sign[flips])
        else:
            roots = np.empty(0)
        self.critical = np.concatenate([[0.0], roots, [PI]])
        self.values = _eval_weights(w, self.critical)
        self.max_value = float(self.values.max())
        self._root_cache: dict[int, float] = {}

    def _eval(self, x: np.ndarray) -> np.ndarray:
        s = np.sin(np.outer(self._j, x))
        return (2.0 / PI) * (self.w @ (s * s))

    def _deriv(self, x: np.ndarray) -> np.ndarray:
        return self._deriv_coeff @ np.sin(2.0 * np.outer(self._j, x))

    def _crossing_roots(self, level: float, flips: np.ndarray,
                        inside: np.ndarray) -> np.ndarray:
        """One root per flipped segment, Newton-seeded from the previous level."""
        cx = self.critical
        lo, hi = cx[flips], cx[flips + 1]
        cache = self._root_cache
        seed = np.array([cache.get(int(s), math.nan) for s in flips])
        x = np.where(np.isnan(seed), 0.5 * (lo + hi), seed)
        settled = np.zeros(len(flips), dtype=bool)
        stuck = np.zeros(len(flips), dtype=bool)
        for _ in range(8):
            fx = self._eval(x) - level
            dp = self._deriv(x)
            with np.errstate(all="ignore"):
                xn = x - fx / dp
            bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
            stuck |= bad
            xn = np.where(bad, x, xn)
            settled |= (np.abs(xn - x) <= ROOT_X_TOL) & ~bad
            x = xn
            if np.all(settled | stuck):
                break
        # A settled Newton root inside its monotone segment is the unique
        # crossing; anything doubtful falls back to bisection on its segment.
        residual_bad = np.abs(self._eval(x) - level) > 1e-9 * max(self.max_value, 1e-300)
        redo = stuck | ~settled | residual_bad
        if np.any(redo):
            x = x.copy()
            x[redo] = _bisect_roots(lambda xs: self._eval(xs) - level,
                                    lo[redo], hi[redo], inside[flips][redo])
        for s, root in zip(flips, x):
            cache[int(s)] = float(root)
        return x

    def superlevel(self, level: float, refine: bool) -> tuple[list[tuple[float, float]], float]:
        """Interval list and measure of {p > level}.

        Without refinement the crossings are linearly interpolated inside
        their monotone segment, which is enough to steer the level search.
        """
        cx, cv = self.critical, self.values
        inside = cv > level
        flips = np.nonzero(inside[:-1] != inside[1:])[0]
        if len(flips) == 0:
            if inside.any():
                return [(0.0, PI)], PI
            return [], 0.0
        if refine:
            roots = self._crossing_roots(level, flips, inside)
        else:
            p0, p1 = cv[flips], cv[flips + 1]
            frac = np.clip((level - p0) / (p1 - p0), 0.0, 1.0)
            roots = cx[flips] + frac * (cx[flips + 1] - cx[flips])

        bounds: list[float] = []
        if inside[0]:
            bounds.append(0.0)
        bounds.extend(roots.tolist())
        if inside[-1]:
            bounds.append(PI)
        pairs = [(bounds[i], bounds[i + 1]) for i in range(0, len(bounds) - 1, 2)]
        pairs = [(a, b) for a, b in pairs if b - a >= MERGE_TOL]
        total = sum(b - a for a, b in pairs)
        return pairs, total


def superlevel_set(p: ModeCombination, level: float) -> IntervalUnion:
    """Superlevel set {x in (0, pi) : p(x) > level} as an interval union."""
    if level < 0.0:
        return FULL
    query = _LevelQuery(np.asarray(p.weights, dtype=float))
    pairs, _ = query.superlevel(level, refine=True)
    return IntervalUnion.from_pairs(pairs)


def bathtub(p: ModeCombination, L: float, *,
            measure_tol: float = BATHTUB_MEASURE_TOL,
            level_hint: float | None = None) -> BathtubResult:
    """Level and superlevel set of p with measure L*pi, by monotone bisection.

    The superlevel measure is nonincreasing in the level; bisection converges
    unless p is constant on a set of positive measure, which the supported
    sine combinations cannot be (a plateau raises DegenerateCombinationError).
    """
    if not (0.0 < L < 1.0):
        raise ValidationError(f"L must lie in (0, 1), got {L}")
    target = L * PI
    query = _LevelQuery(np.asarray(p.weights, dtype=float))
    top = query.max_value
    if top <= 0.0:
        raise DegenerateCombinationError("combination vanishes identically")

    def measure_at(lam: float, refine: bool):
        return query.superlevel(lam, refine)

    # Warm phase: cheap interpolated measures narrow the bracket fast.
    lam_lo, lam_hi = 0.0, top
    if level_hint is not None and 0.0 < level_hint < top:
        lo, hi = 0.8 * level_hint, min(1.25 * level_hint, top)
        if measure_at(lo, False)[1] >= target >= measure_at(hi, False)[1]:
            lam_lo, lam_hi = lo, hi
    for _ in range(60):
        if lam_hi - lam_lo <= 1e-6 * max(lam_hi, 1e-300):
            break
        mid = 0.5 * (lam_lo + lam_hi)
        mu = measure_at(mid, False)[1]
        if abs(mu - target) <= 1e-3:
            break
        if mu > target:
            lam_lo = mid
        else:
            lam_hi = mid

    # Interpolated measures carry a bias, so the refined level can sit just
    # outside the warm bracket; widen until the bracket is valid for the
    # refined measure.
    width = max(lam_hi - lam_lo, 1e-9 * top)
    lam_lo = max(lam_lo - 2.0 * width, 0.0)
    lam_hi = min(lam_hi + 2.0 * width, top)
    mu_lo = measure_at(lam_lo, True)[1] if lam_lo > 0.0 else PI
    for _ in range(60):
        if lam_lo == 0.0 or mu_lo >= target:
            break
        lam_lo = max(lam_lo - (lam_hi - lam_lo), 0.0)
        mu_lo = measure_at(lam_lo, True)[1] if lam_lo > 0.0 else PI
    mu_hi = measure_at(lam_hi, True)[1]
    for _ in range(60):
        if lam_hi == top or mu_hi <= target:
            break
        lam_hi = min(lam_hi + (lam_hi - lam_lo), top)
        mu_hi = measure_at(lam_hi, True)[1]

    # Accurate phase: safeguarded regula falsi (Illinois) on the refined
    # measure, which is continuous and nonincreasing in the level.
    best: tuple[float, list[tuple[float, float]], float] | None = None
    f_lo = mu_lo - target   # >= 0
    f_hi = mu_hi - target   # <= 0
    side = 0
    for _ in range(120):
        if f_lo != f_hi:
            lam = lam_hi - f_hi * (lam_hi - lam_lo) / (f_hi - f_lo)
        else:
            lam = 0.5 * (lam_lo + lam_hi)
        if not (lam_lo < lam < lam_hi):
            lam = 0.5 * (lam_lo + lam_hi)
        pairs, mu = measure_at(lam, True)
        err = abs(mu - target)
        if best is None or err < best[0]:
            best = (err, pairs, lam)
        if err <= measure_tol:
            break
        if mu > target:
            lam_lo, f_lo = lam, mu - target
            if side == -1:
                f_hi *= 0.5
            side = -1
        else:
            lam_hi, f_hi = lam, mu - target
            if side == 1:
                f_lo *= 0.5
            side = 1
        if lam_hi - lam_lo <= 2.0 * np.finfo(float).eps * max(lam_hi, 1e-300):
            gap = measure_at(lam_lo, True)[1] - measure_at(lam_hi, True)[1]
            if gap > PLATEAU_JUMP_TOL:
                raise DegenerateCombinationError(
                    f"level bracket collapsed with a measure jump of {gap:.3e}; "
                    "the combination has a plateau")
            break
    err, pairs, lam = best
    if err > measure_tol:
        raise DegenerateCombinationError(
            f"bathtub level search stalled at measure error {err:.3e} "
            f"(tolerance {measure_tol:.1e})")
    return BathtubResult(IntervalUnion.from_pairs(pairs), lam)


def read_intervals(path) -> IntervalUnion:
    """Read an `a,b` per line CSV file into an interval union."""
    pairs = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if len(row) != 2:
                raise ValidationError(f"interval row must be 'a,b', got {row!r}")
            pairs.append((float(row[0]), float(row[1])))
    return IntervalUnion.from_pairs(pairs)


def write_intervals(omega: IntervalUnion, path) -> None:
    """Write the union as sorted `a,b` rows with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        for a, b in omega:
            fh.write(f"{a:.17g},{b:.17g}\n")
