import math

import numpy as np
import pytest
from mpmath import mp

from actuator_forge import (HEAT, PrecisionError, SineFractional,
                            ValidationError, build_biorthogonal,
                            converge_in_M, gamma_weight, gram_entry,
                            growth_fit)
from actuator_forge.biortho import biorthogonality_residual


class TestGramEntry:
    def test_unit_case(self):
        assert gram_entry(1.0, 1.0, 1.0) == pytest.approx(
            (1 - math.exp(-2)) / 2, rel=1e-15)
        assert gram_entry(1.0, 1.0, 1.0) == pytest.approx(0.4323323583816936, rel=1e-14)

    def test_long_horizon_limit(self):
        assert gram_entry(1.0, 1.0, 1e6) == pytest.approx(0.5, abs=1e-12)

    def test_short_horizon(self):
        assert gram_entry(1.0, 4.0, 0.05) == pytest.approx(
            (1 - math.exp(-0.25)) / 5, rel=1e-15)
        assert gram_entry(1.0, 4.0, 0.05) == pytest.approx(0.04423984338571903, rel=1e-14)

    def test_small_exponent_accuracy(self):
        # expm1 keeps accuracy when s*T is tiny
        assert gram_entry(1e-8, 1e-8, 1e-4) == pytest.approx(1e-4, rel=1e-9)

    def test_domain_errors(self):
        with pytest.raises(ValidationError):
            gram_entry(1.0, -1.0, 1.0)
        with pytest.raises(ValidationError):
            gram_entry(1.0, 1.0, 0.0)


class TestBuild:
    def test_single_mode_closed_form(self):
        bio = build_biorthogonal(HEAT, 1, 1.0)
        expected = 1.0 / gram_entry(1.0, 1.0, 1.0)
        assert bio.norms_sq[0] == pytest.approx(expected, rel=1e-14)
        assert bio.norms_sq[0] == pytest.approx(2.313035285499331, rel=1e-12)
        assert gamma_weight(bio, 1) == pytest.approx(
            math.e ** 2 * (1 - math.exp(-2)) / 2, rel=1e-13)
        assert gamma_weight(bio, 1) == pytest.approx(3.194528049465325, rel=1e-12)

    def test_two_mode_inverse_matches_closed_form(self):
        bio = build_biorthogonal(HEAT, 2, 1.0)
        g11 = gram_entry(1.0, 1.0, 1.0)
        g12 = gram_entry(1.0, 4.0, 1.0)
        g22 = gram_entry(4.0, 4.0, 1.0)
        det = g11 * g22 - g12 * g12
        assert float(bio.inner_mp(1, 2)) == pytest.approx(-g12 / det, rel=1e-12)
        assert bio.norms_sq[0] == pytest.approx(g22 / det, rel=1e-12)

    def test_quadrature_biorthogonality_oracle(self):
        # independent of the closed-form Gram entries: numerical quadrature
        bio = build_biorthogonal(HEAT, 5, 1.0)
        with mp.workprec(512):
            for j in (1, 3):
                for k in (1, 2):
                    theta = lambda t, kk=k: sum(
                        bio.gram.inverse[kk - 1, m] * mp.exp(-mp.mpf((m + 1) ** 2) * t)
                        for m in range(5))
                    val = mp.quad(lambda t, jj=j: mp.exp(-mp.mpf(jj * jj) * t) * theta(t),
                                  [0, 1])
                    assert abs(float(val) - (1.0 if j == k else 0.0)) < 1e-30

    def test_residual_within_tolerance(self, bio_t1_m16, bio_t005_m16):
        for bio in (bio_t1_m16, bio_t005_m16):
            assert bio.gram.residual <= 1e-20
            assert biorthogonality_residual(bio) <= 1e-20

    def test_inverse_symmetry(self, bio_t1_m16, bio_t005_m16):
        for bio in (bio_t1_m16, bio_t005_m16):
            with mp.workprec(bio.gram.precision_bits):
                worst = mp.mpf(0)
                for j in range(1, bio.M + 1):
                    for k in range(j + 1, bio.M + 1):
                        a, b = bio.inner_mp(j, k), bio.inner_mp(k, j)
                        rel = abs(a - b) / abs(a)
                        worst = max(worst, rel)
                assert float(worst) <= 1e-25

    def test_positive_diagonal(self, bio_t1_m16):
        assert np.all(bio_t1_m16.norms_sq > 0)

    def test_micu_zuazua_floor(self, bio_t1_m8):
        floor = math.e ** 2 / 64
        assert bio_t1_m8.norms_sq[0] >= 2 * floor

    def test_norms_nondecreasing_in_M(self):
        for j in (1, 2, 3):
            prev = 0.0
            for M in range(j, 11):
                bio = build_biorthogonal(HEAT, M, 1.0)
                cur = bio.norms_sq[j - 1]
                assert cur >= prev * (1 - 1e-12)
                prev = cur

    def test_gamma_growth(self, bio_t1_m8):
        g1 = gamma_weight(bio_t1_m8, 1)
        g8 = gamma_weight(bio_t1_m8, 8)
        assert g1 > 0 and g8 / g1 > 1e6

    def test_gamma_index_error(self, bio_t1_m8):
        with pytest.raises(IndexError):
            gamma_weight(bio_t1_m8, 9)

    def test_norm_growth_at_most_exponential_in_j(self):
        # log |theta_j|^2 stays below a line of slope 2*pi in j
        bio = build_biorthogonal(HEAT, 12, 1.0)
        with mp.workprec(512):
            logs = np.array([float(mp.log(bio.norm_sq_mp(j))) for j in range(1, 13)])
        js = np.arange(1, 13)
        intercept = np.polyfit(js, logs, 1)[1]
        assert np.all(logs <= intercept + 1.0 + 2 * math.pi * js)

    def test_insufficient_precision_raises(self):
        with pytest.raises(PrecisionError) as err:
            build_biorthogonal(HEAT, 16, 1.0, precision_bits=64)
        assert "64 bits" in str(err.value) or "precision" in str(err.value).lower()

    def test_validation(self):
        with pytest.raises(ValidationError):
            build_biorthogonal(HEAT, 0, 1.0)
        with pytest.raises(ValidationError):
            build_biorthogonal(HEAT, 4, -1.0)
        with pytest.raises(ValidationError):
            build_biorthogonal(HEAT, 4, 1.0, precision_bits=32)


class TestConvergeInM:
    def test_heat_family_converges(self):
        report = converge_in_M(HEAT, 1, 1.0, M_start=1, M_max=24, rtol=0.05)
        assert report.converged
        assert report.m_star <= 24
        assert report.norm_sq > 0

    def test_history_monotone(self):
        report = converge_in_M(HEAT, 2, 1.0, M_start=2, M_max=10, rtol=1e-9)
        hist = np.array(report.history)
        assert np.all(np.diff(hist) >= -1e-12 * hist[:-1])

    def test_divergent_muntz_flagged(self):
        report = converge_in_M(SineFractional(0.5), 1, 1.0,
                               M_start=1, M_max=14, rtol=1e-3)
        assert not report.converged
        assert report.m_star == 14

    def test_preconditions(self):
        with pytest.raises(ValidationError):
            converge_in_M(HEAT, 3, 1.0, M_start=2, M_max=10, rtol=1e-3)
        with pytest.raises(ValidationError):
            converge_in_M(HEAT, 1, 1.0, M_start=4, M_max=3, rtol=1e-3)


class TestGrowthFit:
    def test_heat_t1(self, bio_t1_m8):
        fit = growth_fit(bio_t1_m8)
        assert fit.ok
        assert 0 < fit.m2 < 2.0

    def test_envelope_dominates(self, bio_t1_m8):
        fit = growth_fit(bio_t1_m8)
        with mp.workprec(512):
            for j in range(1, 9):
                log_norm = float(mp.log(bio_t1_m8.norm_sq_mp(j)))
                assert log_norm <= math.log(fit.m1) + fit.m2 * (j * j) + 1e-9

    def test_minimum_size(self):
        bio = build_biorthogonal(HEAT, 3, 1.0)
        fit = growth_fit(bio)
        assert math.isfinite(fit.m2)
        with pytest.raises(ValidationError):
            growth_fit(build_biorthogonal(HEAT, 2, 1.0))

    def test_short_horizon_report(self):
        bio = build_biorthogonal(HEAT, 12, 0.05)
        fit = growth_fit(bio)
        assert math.isfinite(fit.m2)
        assert isinstance(fit.ok, bool)
