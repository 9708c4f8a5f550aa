import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from services.beamform import BeamformerPair, WeightedObjective, candidate_pair, optimal_high_snr
from services.density import WeightSpectrum
from services.montecarlo import McConfig, empirical_rate, empirical_rates
from services.rates import (
    AbcTriple,
    HighSnrSummary,
    abc_coefficients,
    eigen_split,
    ergodic_rate_general_m,
    ergodic_rate_m_user,
    ergodic_rate_three_user,
    ergodic_rate_two_user,
    high_snr_summary,
    pair_rates_batch,
    rate_high_snr_limit,
    rate_low_snr_slope,
    rate_rank_deficient,
    sum_rate,
    sum_rate_high_snr_limit,
    two_user_rate_abc,
    user_spectra,
    weighted_sum_rate,
)
from utils.errors import BoundaryError, DimensionError, DomainError, RankError
from utils.linalg import Covariance, GrassmannVector, random_covariance, random_grassmann
from utils.specfun import h, h_prime

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


def _beams(rng, dim=2, count=2):
    return [GrassmannVector(v) for v in random_grassmann(rng, dim, count=count)]


class TestAbc:
    def test_rejects_cauchy_schwarz_violation(self):
        with pytest.raises(DomainError):
            AbcTriple(1.0, 1.0, 1.5)

    def test_clamps_rounding_excess(self):
        triple = AbcTriple(1.0, 4.0, 2.0 * (1 + 1e-12))
        assert triple.C == 2.0
        assert triple.gram_det == 0.0

    def test_eigen_split(self):
        split = eigen_split(AbcTriple(2.0, 1.0, 0.0))
        assert (split.lambda1, split.lambda2, split.lambda_tilde1) == (2.0, 1.0, 1.0)
        assert not split.degenerate
        assert eigen_split(AbcTriple(1.0, 1.0, 0.0)).degenerate

    def test_requires_two_antennas(self, rng):
        s3 = random_covariance(rng, dim=3)
        w = _beams(rng, dim=3)
        with pytest.raises(DimensionError):
            abc_coefficients(s3, w[0], w[1])

    def test_mismatched_dimensions(self, rng, sigma_common):
        with pytest.raises(DimensionError):
            abc_coefficients(sigma_common, _beams(rng, dim=3)[0], _beams(rng)[0])


class TestTwoUserRate:
    @pytest.mark.slow
    @pytest.mark.parametrize("rho", [0.1, 1.0, 10.0, 100.0])
    def test_matches_simulation(self, sigma_better, small_mc, rho):
        s1, s2 = sigma_better
        pair = candidate_pair(1.0, 1.0, s1, s2)
        closed = sum_rate(s1, s2, pair, rho).per_user
        for estimate, value in zip(empirical_rate(s1, s2, pair, rho, small_mc), closed):
            assert estimate.agrees_with(value, k_se=4.0)

    def test_identity_orthogonal_beams(self):
        # A = B = 1, C = 0: скорость x·h'(x), x = ρ/2
        rho = 3.0
        rate = ergodic_rate_two_user(Covariance(np.eye(2)), GrassmannVector([1, 0]), GrassmannVector([0, 1]), rho)
        x = rho / 2.0
        assert rate == pytest.approx(x * h_prime(x), rel=1e-12)

    def test_continuous_at_confluence(self):
        near = float(two_user_rate_abc(1.0, 1.0, 1e-6, 2.0))
        exact = float(two_user_rate_abc(1.0, 1.0, 0.0, 2.0))
        assert near == pytest.approx(exact, abs=1e-8)

    def test_zero_interference_beam(self):
        # B = 0: скорость одного пользователя без помехи h(ρA/2)
        rate = float(two_user_rate_abc(2.0, 0.0, 0.0, 4.0))
        assert rate == pytest.approx(h(4.0), rel=1e-12)

    def test_vectorized_matches_scalar(self, sigma_worse, rng):
        s1, s2 = sigma_worse
        W1, W2 = random_grassmann(rng, 2, count=50), random_grassmann(rng, 2, count=50)
        r1, r2 = pair_rates_batch(s1, s2, W1, W2, 5.0)
        for k in range(50):
            w1, w2 = GrassmannVector(W1[k]), GrassmannVector(W2[k])
            assert r1[k] == pytest.approx(ergodic_rate_two_user(s1, w1, w2, 5.0), abs=1e-12)
            assert r2[k] == pytest.approx(ergodic_rate_two_user(s2, w2, w1, 5.0), abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(seeds)
    def test_non_negative_and_below_interference_free(self, seed):
        rng = np.random.default_rng(seed)
        s = random_covariance(rng)
        w1, w2 = _beams(rng)
        rho = float(10.0 ** rng.uniform(-2.0, 3.0))
        rate = ergodic_rate_two_user(s, w1, w2, rho)
        a = abc_coefficients(s, w1, w2).A
        assert 0.0 <= rate <= h(rho * a / 2.0) + 1e-12

    def test_rejects_non_positive_snr(self, sigma_common):
        w = GrassmannVector([1, 0])
        with pytest.raises(DomainError):
            ergodic_rate_two_user(sigma_common, w, w, 0.0)


class TestLimits:
    def test_low_snr_slope(self, sigma_better):
        s1, s2 = sigma_better
        pair = candidate_pair(0.5, 0.5, s1, s2)
        rho = 1e-6
        assert ergodic_rate_two_user(s1, pair.w1, pair.w2, rho) / rho == \
            pytest.approx(rate_low_snr_slope(s1, pair.w1), rel=1e-4)

    @settings(max_examples=40, deadline=None)
    @given(seeds)
    def test_high_snr_methods_agree(self, seed):
        rng = np.random.default_rng(seed)
        s = random_covariance(rng)
        w1, w2 = _beams(rng)
        t = abc_coefficients(s, w1, w2)
        assert rate_high_snr_limit(t, "direct") == pytest.approx(rate_high_snr_limit(t, "fg"), rel=1e-9, abs=1e-12)

    def test_finite_snr_approaches_limit(self, sigma_better):
        s1, s2 = sigma_better
        pair = candidate_pair(1.0, 1.0, s1, s2)
        t = abc_coefficients(s1, pair.w1, pair.w2)
        assert ergodic_rate_two_user(s1, pair.w1, pair.w2, 1e7) == pytest.approx(rate_high_snr_limit(t), rel=1e-4)

    def test_coinciding_beams_saturate(self):
        w = GrassmannVector([1, 0])
        rate = ergodic_rate_two_user(Covariance(np.eye(2)), w, w, 1e4)
        assert rate < math.log(2.0) + 0.01

    def test_boundary_raises(self):
        with pytest.raises(BoundaryError):
            rate_high_snr_limit(AbcTriple(1.0, 0.0, 0.0))
        with pytest.raises(BoundaryError):
            rate_high_snr_limit(AbcTriple(1.0, 1.0, 1.0))

    def test_unknown_method(self):
        with pytest.raises(DomainError):
            rate_high_snr_limit(AbcTriple(2.0, 1.0, 0.5), method="series")


class TestRankDeficient:
    def test_matches_general_formula(self, rng):
        s = Covariance([[1.0, 1.0], [1.0, 1.0]])
        for _ in range(10):
            w1, w2 = _beams(rng)
            assert rate_rank_deficient(s, w1, w2, 4.0) == \
                pytest.approx(ergodic_rate_two_user(s, w1, w2, 4.0), rel=1e-9, abs=1e-12)

    def test_orthogonal_interference_has_no_penalty(self):
        s = Covariance([[2.0, 0.0], [0.0, 0.0]])
        rate = rate_rank_deficient(s, GrassmannVector([1, 0]), GrassmannVector([0, 1]), 1.0)
        assert rate == pytest.approx(h(1.0), rel=1e-12)

    def test_requires_rank_one(self, sigma_common):
        w = GrassmannVector([1, 0])
        with pytest.raises(RankError):
            rate_rank_deficient(sigma_common, w, w, 1.0)


class TestGeneralM:
    def test_two_users_match_closed_form(self, rng):
        for _ in range(10):
            s = random_covariance(rng)
            w = _beams(rng)
            signal, intf = user_spectra(s, w, 0)
            assert ergodic_rate_general_m(signal, intf, 2.0, 2) == \
                pytest.approx(ergodic_rate_two_user(s, w[0], w[1], 2.0), abs=1e-10)

    def test_three_users_match_explicit_form(self, rng):
        for _ in range(10):
            s = random_covariance(rng, dim=3)
            w = _beams(rng, dim=3, count=3)
            for user in range(3):
                assert ergodic_rate_m_user(s, w, user, 1.5) == \
                    pytest.approx(ergodic_rate_three_user(s, *w, 1.5, user=user), abs=1e-10)

    @pytest.mark.slow
    def test_four_users_match_simulation(self):
        sigma = Covariance(np.diag([4.0, 3.0, 2.0, 1.0]))
        beams = [GrassmannVector(np.eye(4)[k]) for k in range(4)]
        closed = ergodic_rate_general_m(WeightSpectrum([4, 3, 2, 1]), WeightSpectrum([3, 2, 1, 0]), 2.0, 4)
        estimate = empirical_rates([sigma] * 4, beams, 2.0, McConfig(n_samples=200_000, seed=5, batch=50_000))[0]
        assert estimate.agrees_with(closed, k_se=4.0)

    def test_three_users_require_three_antennas(self, sigma_common):
        w = GrassmannVector([1, 0])
        with pytest.raises(DimensionError):
            ergodic_rate_three_user(sigma_common, w, w, w, 1.0)

    def test_tied_spectrum_is_perturbed(self):
        tied = ergodic_rate_general_m(WeightSpectrum([2.0, 2.0, 1.0]), WeightSpectrum([2.0, 1.0, 0.0]), 3.0, 3)
        close = ergodic_rate_general_m(WeightSpectrum([2.0 + 1e-4, 2.0 - 1e-4, 1.0]),
                                       WeightSpectrum([2.0, 1.0, 0.0]), 3.0, 3)
        assert tied == pytest.approx(close, abs=1e-6)

    def test_invariant_under_spectrum_permutation(self, rng):
        signal, intf = [3.0, 1.0, 2.0], [0.5, 2.5, 0.0]
        reference = ergodic_rate_general_m(WeightSpectrum(signal), WeightSpectrum(intf), 2.0, 3)
        for _ in range(6):
            permuted = ergodic_rate_general_m(WeightSpectrum(rng.permutation(signal)),
                                              WeightSpectrum(rng.permutation(intf)), 2.0, 3)
            assert permuted == reference


class TestSumRate:
    def test_weighted_report(self, sigma_better):
        s1, s2 = sigma_better
        pair = candidate_pair(1.0, 1.0, s1, s2)
        report = weighted_sum_rate(s1, s2, pair, 10.0, WeightedObjective(1.0, 0.5))
        r1, r2 = report.per_user
        assert report.sum == pytest.approx(r1 + r2)
        assert report.weighted == pytest.approx(r1 + 0.5 * r2)
        assert sum_rate(s1, s2, pair, 10.0).weighted is None

    def test_high_snr_limit_is_sum_of_user_limits(self, rng):
        for _ in range(10):
            s1, s2 = random_covariance(rng), random_covariance(rng)
            pair, summary = optimal_high_snr(s1, s2)
            per_user = rate_high_snr_limit(abc_coefficients(s1, pair.w1, pair.w2)) + \
                rate_high_snr_limit(abc_coefficients(s2, pair.w2, pair.w1))
            assert sum_rate_high_snr_limit(summary) == pytest.approx(per_user, rel=1e-8)

    def test_summary_fields(self, sigma_common):
        summary = high_snr_summary(Covariance([[1.0, 0.8], [0.8, 1.0]]), sigma_common)
        assert summary.eta1 == pytest.approx(5.8, rel=1e-3)
        assert summary.kappa2 == pytest.approx(summary.tau2 / summary.tau1)
        assert summary.kappa1 == pytest.approx(summary.eta1 * summary.tau2 / (summary.eta2 * summary.tau1))
        assert summary.chi1 == pytest.approx(9.0, rel=1e-12)

    def test_pair_from_arrays(self, sigma_better):
        s1, s2 = sigma_better
        pair = BeamformerPair(GrassmannVector([1, 0]), GrassmannVector([0, 1]))
        assert sum_rate(s1, s2, pair, 1.0).sum > 0
        assert math.isfinite(sum_rate(s1, s2, pair, 1e6).sum)

    def test_proportional_covariances_limit_two(self):
        summary = HighSnrSummary(eta1=1.0, eta2=1.0, tau1=1.0, tau2=1.0, tau3_abs=0.0,
                                 kappa1=1.0, kappa2=1.0, chi1=1.0, chi2=1.0)
        assert sum_rate_high_snr_limit(summary) == pytest.approx(2.0, abs=1e-12)

    @pytest.mark.parametrize("kappa2", [0.2, 1.0, 7.5])
    def test_limit_increases_with_kappa1(self, kappa2):
        values = []
        for kappa1 in np.logspace(-2.0, 3.0, 60):
            summary = HighSnrSummary(eta1=1.0, eta2=1.0, tau1=1.0, tau2=1.0, tau3_abs=0.0,
                                     kappa1=float(kappa1), kappa2=kappa2, chi1=1.0, chi2=1.0)
            values.append(sum_rate_high_snr_limit(summary))
        assert np.all(np.diff(values) > 0)
