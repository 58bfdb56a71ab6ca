import math

import numpy as np
import pytest

from actuator_forge import (DegenerateCombinationError, IntervalUnion,
                            ModeCombination, ValidationError, bathtub,
                            component_count, measure, read_intervals,
                            superlevel_set, symdiff_measure, write_intervals)
from actuator_forge import geometry

PI = math.pi


def sin_sq_combination(*weights):
    """Combination equal to sum w_j sin^2(jx) (absorbs the 2/pi normalization)."""
    return ModeCombination.from_weights([w * PI / 2 for w in weights])


class TestIntervalUnion:
    def test_validation(self):
        with pytest.raises(ValidationError):
            IntervalUnion(((-0.5, 1.0),))
        with pytest.raises(ValidationError):
            IntervalUnion(((0.0, PI + 0.1),))
        with pytest.raises(ValidationError):
            IntervalUnion(((1.0, 1.0),))
        with pytest.raises(ValidationError):
            IntervalUnion(((1.0, 2.0), (1.5, 2.5)))

    def test_from_pairs_merges_and_sorts(self):
        omega = IntervalUnion.from_pairs([(2.0, 2.5), (0.5, 1.0), (0.9, 1.4)])
        assert omega.intervals == ((0.5, 1.4), (2.0, 2.5))

    def test_from_pairs_drops_slivers(self):
        omega = IntervalUnion.from_pairs([(0.5, 0.5 + 1e-14), (1.0, 2.0)])
        assert omega.intervals == ((1.0, 2.0),)

    def test_measure(self):
        assert measure(IntervalUnion(((0.0, PI),))) == pytest.approx(PI)
        assert measure(IntervalUnion(((0.0, 0.5), (1.0, 1.5)))) == pytest.approx(1.0)
        assert measure(IntervalUnion()) == 0.0


class TestSymdiff:
    def test_identical(self):
        omega = IntervalUnion(((0.1, 0.9), (1.5, 2.0)))
        assert symdiff_measure(omega, omega) == 0.0

    def test_shifted(self):
        a = IntervalUnion(((0.0, 1.0),))
        b = IntervalUnion(((0.5, 1.5),))
        assert symdiff_measure(a, b) == pytest.approx(1.0, abs=1e-14)

    def test_against_empty(self):
        omega = IntervalUnion(((0.2, 0.8), (2.0, 2.6)))
        assert symdiff_measure(omega, IntervalUnion()) == pytest.approx(omega.measure)

    def test_random_consistency(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            pa = np.sort(rng.uniform(0, PI, 4))
            pb = np.sort(rng.uniform(0, PI, 4))
            a = IntervalUnion.from_pairs([(pa[0], pa[1]), (pa[2], pa[3])])
            b = IntervalUnion.from_pairs([(pb[0], pb[1]), (pb[2], pb[3])])
            d = symdiff_measure(a, b)
            grid = np.linspace(0, PI, 200001)
            in_a = np.zeros(len(grid), bool)
            for x, y in a:
                in_a |= (grid >= x) & (grid < y)
            in_b = np.zeros(len(grid), bool)
            for x, y in b:
                in_b |= (grid >= x) & (grid < y)
            approx = np.mean(in_a != in_b) * PI
            assert d == pytest.approx(approx, abs=2e-3)


class TestComponentCount:
    def test_basic(self):
        assert component_count(IntervalUnion(((0.1, 0.4),))) == 1
        assert component_count(IntervalUnion()) == 0

    def test_gap_merging(self):
        omega = IntervalUnion(((0.1, 0.5), (0.5 + 1e-10, 0.9), (1.5, 2.0)))
        assert component_count(omega) == 2

    def test_two_peak_level_set(self):
        omega, _ = bathtub(sin_sq_combination(0.0, 1.0), 0.5)
        assert component_count(omega) == 2


class TestSuperlevelSet:
    def test_sin_sq_symmetric(self):
        p = sin_sq_combination(1.0)
        omega = superlevel_set(p, math.sin(0.3) ** 2)
        assert len(omega) == 1
        a, b = omega.intervals[0]
        assert a == pytest.approx(0.3, abs=1e-10)
        assert b == pytest.approx(PI - 0.3, abs=1e-10)

    def test_negative_level_full(self):
        assert superlevel_set(sin_sq_combination(1.0), -0.5).intervals == ((0.0, PI),)

    def test_level_above_max_empty(self):
        assert superlevel_set(sin_sq_combination(1.0), 2.0).intervals == ()

    def test_sin_sq_2x_half_level(self):
        omega = superlevel_set(sin_sq_combination(0.0, 1.0), 0.5)
        # boundaries at the odd multiples of pi/8; two bands around the peaks
        expected = ((PI / 8, 3 * PI / 8), (5 * PI / 8, 7 * PI / 8))
        assert len(omega) == 2
        for (a, b), (ea, eb) in zip(omega, expected):
            assert a == pytest.approx(ea, abs=1e-11)
            assert b == pytest.approx(eb, abs=1e-11)

    def test_boundary_value_accuracy(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            n = rng.integers(1, 9)
            w = rng.uniform(0, 1, n)
            w[rng.integers(0, n)] += 0.2
            p = ModeCombination.from_weights(w)
            level = rng.uniform(0.2, 0.8) * p(np.linspace(0, PI, 500)).max()
            omega = superlevel_set(p, level)
            for a, b in omega:
                for endpoint in (a, b):
                    if 1e-9 < endpoint < PI - 1e-9:
                        assert abs(p(endpoint) - level) <= 1e-11

    def test_antitone_in_level(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            n = rng.integers(1, 7)
            w = rng.uniform(0, 1, n) + 0.05
            p = ModeCombination.from_weights(w)
            top = p(np.linspace(0, PI, 400)).max()
            l1, l2 = np.sort(rng.uniform(0.05, 0.95, 2) * top)
            big = superlevel_set(p, l1)
            small = superlevel_set(p, l2)
            # containment up to the stated symmetric-difference slack
            inter = small.measure + big.measure - _union_measure(small, big)
            assert small.measure - inter <= 1e-10

    def test_component_bound(self):
        rng = np.random.default_rng(37)
        for _ in range(30):
            n = int(rng.integers(1, 9))
            w = rng.uniform(0, 1, n)
            w[-1] += 0.1
            p = ModeCombination.from_weights(w)
            top = p(np.linspace(0, PI, 600)).max()
            omega = superlevel_set(p, rng.uniform(0.05, 0.95) * top)
            assert component_count(omega) <= n

    def test_excludes_endpoints_for_positive_level(self):
        rng = np.random.default_rng(41)
        for _ in range(20):
            n = int(rng.integers(1, 8))
            w = rng.uniform(0.1, 1, n)
            p = ModeCombination.from_weights(w)
            top = p(np.linspace(0, PI, 400)).max()
            omega = superlevel_set(p, rng.uniform(0.1, 0.9) * top)
            assert omega.intervals[0][0] > 0.0
            assert omega.intervals[-1][1] < PI


def _union_measure(a, b):
    merged = IntervalUnion.from_pairs(list(a) + list(b))
    return merged.measure


class TestBathtub:
    def test_single_mode_closed_form(self):
        omega, level = bathtub(sin_sq_combination(1.0), 0.2)
        assert omega.intervals[0][0] == pytest.approx(PI / 2 - 0.1 * PI, abs=1e-10)
        assert omega.intervals[0][1] == pytest.approx(PI / 2 + 0.1 * PI, abs=1e-10)
        assert level == pytest.approx(math.sin(0.4 * PI) ** 2, abs=1e-9)

    def test_almost_full(self):
        omega, _ = bathtub(sin_sq_combination(1.0, 0.2, 0.05), 0.999)
        assert omega.measure == pytest.approx(0.999 * PI, abs=1e-10)

    def test_two_peaks(self):
        omega, level = bathtub(sin_sq_combination(0.0, 1.0), 0.5)
        assert level == pytest.approx(0.5, abs=1e-9)
        assert len(omega) == 2
        for (a, b), center in zip(omega, (PI / 4, 3 * PI / 4)):
            assert b - a == pytest.approx(PI / 4, abs=1e-10)
            assert 0.5 * (a + b) == pytest.approx(center, abs=1e-10)

    def test_measure_property_random(self):
        rng = np.random.default_rng(2024)
        for trial in range(120):
            n = int(rng.integers(1, 9))
            w = rng.uniform(0, 1, n)
            w[rng.integers(0, n)] += 0.1
            L = float(rng.uniform(0.05, 0.95))
            omega, _ = bathtub(ModeCombination.from_weights(w), L)
            assert abs(omega.measure - L * PI) <= 1e-10

    def test_invalid_fraction(self):
        with pytest.raises(ValidationError):
            bathtub(sin_sq_combination(1.0), 1.5)

    def test_plateau_detection(self, monkeypatch):
        # A step-shaped measure profile cannot pin the prescribed measure;
        # simulate one to exercise the plateau guard.
        class StepQuery:
            max_value = 1.0

            def __init__(self, w):
                pass

            def superlevel(self, level, refine):
                if level < 0.5:
                    return [(0.0, 2.0)], 2.0
                return [(0.0, 1.0)], 1.0

        monkeypatch.setattr(geometry, "_LevelQuery", StepQuery)
        with pytest.raises(DegenerateCombinationError):
            bathtub(sin_sq_combination(1.0), 0.45)

    def test_combination_validation(self):
        with pytest.raises(ValidationError):
            ModeCombination.from_weights([])
        with pytest.raises(ValidationError):
            ModeCombination.from_weights([0.0, 0.0])
        with pytest.raises(ValidationError):
            ModeCombination.from_weights([-1.0, 1.0])


class TestIntervalIO:
    def test_round_trip(self, tmp_path):
        omega = IntervalUnion(((0.12345678901234567, 0.9), (1.5, 2.25)))
        path = tmp_path / "omega.csv"
        write_intervals(omega, path)
        back = read_intervals(path)
        assert symdiff_measure(omega, back) == 0.0
        assert back.measure == pytest.approx(omega.measure, abs=1e-15)

    def test_rejects_malformed(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0.1,0.2,0.3\n")
        with pytest.raises(ValidationError):
            read_intervals(path)

    def test_comments_ignored(self, tmp_path):
        path = tmp_path / "omega.csv"
        path.write_text("# header\n0.5,1.0\n")
        assert read_intervals(path).intervals == ((0.5, 1.0),)
