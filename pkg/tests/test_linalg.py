import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from data.config import Config
from utils.errors import DimensionError, DomainError, SingularMatrixError
from utils.linalg import (
    Covariance,
    GrassmannVector,
    abc_values,
    canonical_phase,
    chordal_distance,
    condition_number,
    d_sigma,
    eigh,
    generalized_eig,
    inv_sqrtm_pd,
    random_covariance,
    random_grassmann,
    sqrtm_psd,
    tau_coefficients,
)

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


class TestCovariance:
    def test_from_pairs_round_trip(self):
        s = Covariance.from_pairs(Config.SIGMA_1_BETTER)
        assert Covariance.from_pairs(s.to_pairs()).matrix.tolist() == s.matrix.tolist()
        assert s.trace_normalized

    def test_matrix_is_read_only(self):
        s = Covariance(np.eye(2))
        with pytest.raises(ValueError):
            s.matrix[0, 0] = 5.0

    def test_rejects_non_hermitian(self):
        with pytest.raises(DomainError):
            Covariance([[1.0, 0.5], [0.1, 1.0]])

    def test_rejects_indefinite(self):
        with pytest.raises(DomainError):
            Covariance([[1.0, 2.0], [2.0, 1.0]])

    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            Covariance(np.ones((2, 3)))

    def test_accepts_rank_one(self):
        s = Covariance([[1.0, 1.0], [1.0, 1.0]])
        assert s.dim == 2

    def test_scaled(self):
        s = Covariance(np.diag([2.0, 1.0])).scaled(3.0)
        np.testing.assert_allclose(s.matrix, np.diag([6.0, 3.0]))


class TestCanonicalPhase:
    def test_first_significant_coordinate_is_real_non_negative(self):
        w = canonical_phase(np.array([1j, 1.0]) / math.sqrt(2))
        assert w[0].imag == 0.0 and w[0].real > 0
        assert np.linalg.norm(w) == pytest.approx(1.0, abs=1e-15)

    def test_skips_negligible_leading_entry(self):
        w = canonical_phase([1e-12, -1.0])
        assert w[1].real > 0 and w[1].imag == 0.0

    @settings(max_examples=100, deadline=None)
    @given(seeds)
    def test_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        once = canonical_phase(rng.standard_normal(3) + 1j * rng.standard_normal(3))
        assert np.array_equal(canonical_phase(once), once)

    def test_idempotent_on_large_batch(self):
        rng = np.random.default_rng(17904)
        once = canonical_phase(rng.standard_normal((20000, 3)) + 1j * rng.standard_normal((20000, 3)))
        assert np.array_equal(canonical_phase(once), once)

    def test_canonical_rows_pass_through(self):
        canonical = canonical_phase(np.array([0.6, 0.8j]))
        batch = np.array([canonical, [1j, 0.0]])
        out = canonical_phase(batch)
        assert np.array_equal(out[0], canonical)
        assert out[1][0] == 1.0

    @settings(max_examples=50, deadline=None)
    @given(seeds, st.floats(min_value=-math.pi, max_value=math.pi))
    def test_phase_invariant(self, seed, phi):
        rng = np.random.default_rng(seed)
        raw = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        np.testing.assert_allclose(canonical_phase(raw * np.exp(1j * phi)), canonical_phase(raw), atol=1e-12)

    def test_rejects_zero_vector(self):
        with pytest.raises(DomainError):
            GrassmannVector([0.0, 0.0])

    def test_batch_shape(self):
        rng = np.random.default_rng(3)
        batch = random_grassmann(rng, 2, count=5)
        assert batch.shape == (5, 2)
        np.testing.assert_allclose(np.linalg.norm(batch, axis=1), 1.0, atol=1e-15)


class TestEigh:
    def test_two_by_two_matches_numpy(self, sigma_better):
        s1, _ = sigma_better
        dec = eigh(s1)
        np.testing.assert_allclose(dec.values, np.linalg.eigvalsh(s1.matrix)[::-1], rtol=1e-13)
        for value, vector in zip(dec.values, dec.vectors):
            np.testing.assert_allclose(s1.matrix @ vector.coords, value * vector.coords, atol=1e-13)

    def test_diagonal_input(self):
        dec = eigh(Covariance(np.diag([1.0, 4.0])))
        np.testing.assert_allclose(dec.values, [4.0, 1.0])
        assert dec.vectors[0].overlap(GrassmannVector([0.0, 1.0])) == pytest.approx(1.0)

    def test_flags_degenerate_spectrum(self):
        dec = eigh(Covariance(np.eye(2)))
        assert dec.degenerate
        assert abs(np.vdot(dec.vectors[0].coords, dec.vectors[1].coords)) < 1e-15

    def test_larger_dimension_descending(self, rng):
        s = random_covariance(rng, dim=4)
        dec = eigh(s)
        assert np.all(np.diff(dec.values) <= 0)
        np.testing.assert_allclose(dec.basis.conj().T @ dec.basis, np.eye(4), atol=1e-12)

    def test_small_eigenvalue_keeps_relative_precision(self):
        dec = eigh(Covariance([[1.0, 1.0 - 1e-9], [1.0 - 1e-9, 1.0]]))
        assert dec.values[1] == pytest.approx(1e-9, rel=1e-6)


class TestMatrixFunctions:
    def test_sqrt_squares_back(self, sigma_worse):
        s1, _ = sigma_worse
        root = sqrtm_psd(s1).matrix
        np.testing.assert_allclose(root @ root, s1.matrix, atol=1e-13)

    def test_inverse_sqrt_whitens(self, sigma_worse):
        _, s2 = sigma_worse
        inv_root = inv_sqrtm_pd(s2).matrix
        np.testing.assert_allclose(inv_root @ s2.matrix @ inv_root, np.eye(2), atol=1e-12)

    def test_inverse_sqrt_of_singular_raises(self):
        with pytest.raises(SingularMatrixError):
            inv_sqrtm_pd(Covariance([[1.0, 1.0], [1.0, 1.0]]))


class TestGeneralizedEig:
    def test_pencil_equation(self, sigma_better):
        s1, s2 = sigma_better
        pair = generalized_eig(s1, s2)
        assert pair.values[0] >= pair.values[1]
        for value, vector in zip(pair.values, pair.vectors):
            x = vector.coords
            np.testing.assert_allclose(s1.matrix @ x, value * (s2.matrix @ x), atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(seeds)
    def test_grassmann_duality(self, seed):
        rng = np.random.default_rng(seed)
        s1, s2 = random_covariance(rng), random_covariance(rng)
        forward, backward = generalized_eig(s1, s2), generalized_eig(s2, s1)
        # u₁(Σ₂⁻¹Σ₁) = u₂(Σ₁⁻¹Σ₂) и наоборот
        assert chordal_distance(forward.vectors[0], backward.vectors[1]) < 1e-8
        assert chordal_distance(forward.vectors[1], backward.vectors[0]) < 1e-8

    @settings(max_examples=50, deadline=None)
    @given(seeds)
    def test_conditioning_sandwich(self, seed):
        rng = np.random.default_rng(seed)
        s1, s2 = random_covariance(rng), random_covariance(rng)
        eta = generalized_eig(s1, s2).values
        chi1, chi2 = condition_number(s1), condition_number(s2)
        ratio = eta[0] / eta[1]
        assert chi1 / chi2 <= ratio * (1 + 1e-9)
        assert ratio <= chi1 * chi2 * (1 + 1e-9)

    def test_common_basis_fixture_one(self, sigma_common):
        s1 = Covariance([[1.0, 0.8], [0.8, 1.0]])
        pair = generalized_eig(s1, sigma_common)
        tau1, tau2, _ = tau_coefficients(pair, sigma_common)
        assert pair.values[0] == pytest.approx(5.8, rel=1e-3)
        assert pair.values[1] == pytest.approx(0.1184, rel=1e-3)
        assert tau1 == pytest.approx(3.2222, rel=1e-3)
        assert tau2 == pytest.approx(0.5918, rel=1e-3)

    def test_common_basis_fixture_two_swaps_taus(self, sigma_common):
        s1 = Covariance([[1.0, -0.8], [-0.8, 1.0]])
        pair = generalized_eig(s1, sigma_common)
        tau1, tau2, _ = tau_coefficients(pair, sigma_common)
        assert pair.values[0] == pytest.approx(1.0653, rel=1e-3)
        assert pair.values[1] == pytest.approx(0.6444, rel=1e-3)
        assert (tau1, tau2) == (pytest.approx(0.5918, rel=1e-3), pytest.approx(3.2222, rel=1e-3))

    def test_common_basis_fixture_three(self, sigma_common):
        s1 = Covariance([[2 / 3, -0.34485], [-0.34485, 1 / 3]])
        tau1, tau2, _ = tau_coefficients(generalized_eig(s1, sigma_common), sigma_common)
        assert tau1 == pytest.approx(1.90725, rel=1e-3)
        assert tau2 == pytest.approx(1.90725, rel=1e-3)
        # опубликованные η получены для Tr(Σ₁) = 2
        etas = generalized_eig(s1.scaled(2.0), sigma_common).values
        np.testing.assert_allclose(etas, [1.4603, 0.5397], rtol=1e-3)

    def test_proportional_pencil_is_degenerate(self):
        s = Covariance(np.diag([3.0, 1.0]))
        pair = generalized_eig(s.scaled(2.0), s)
        assert pair.degenerate
        np.testing.assert_allclose(pair.values, [2.0, 2.0], rtol=1e-12)
        assert pair.vectors[0].overlap(GrassmannVector([1.0, 0.0])) == pytest.approx(1.0)

    def test_singular_second_matrix_raises(self, sigma_common):
        with pytest.raises(SingularMatrixError):
            generalized_eig(sigma_common, Covariance([[1.0, 1.0], [1.0, 1.0]]))

    def test_dimension_mismatch(self, sigma_common, rng):
        with pytest.raises(DimensionError):
            generalized_eig(sigma_common, random_covariance(rng, dim=3))


class TestDistances:
    def test_identity_reduces_to_chordal(self, rng):
        for _ in range(20):
            w1, w2 = (GrassmannVector(v) for v in random_grassmann(rng, 2, count=2))
            assert d_sigma(Covariance(np.eye(2)), w1, w2) == pytest.approx(chordal_distance(w1, w2), abs=1e-12)

    def test_range_and_zero_on_equal_beams(self, rng):
        s = random_covariance(rng)
        w = GrassmannVector(random_grassmann(rng, 2))
        assert d_sigma(s, w, w) == pytest.approx(0.0, abs=1e-7)
        for _ in range(20):
            w1, w2 = (GrassmannVector(v) for v in random_grassmann(rng, 2, count=2))
            assert 0.0 <= d_sigma(s, w1, w2) <= 1.0

    def test_chordal_distance_resolves_small_angles(self):
        t = 1e-10
        w1, w2 = GrassmannVector([1.0, 0.0]), GrassmannVector([math.cos(t), math.sin(t)])
        assert chordal_distance(w1, w2) == pytest.approx(t, rel=1e-6)
        assert chordal_distance(w1, w1) == 0.0
        assert chordal_distance(w1, GrassmannVector([0.0, 1.0])) == 1.0

    def test_d_sigma_reaches_one(self, rng):
        # w = √λ₂·u₁ ± e^{iν}√λ₁·u₂ дают A = B и C = 0
        for _ in range(20):
            s = random_covariance(rng)
            dec = eigh(s)
            u1, u2 = (v.coords for v in dec.vectors)
            lam1, lam2 = dec.values
            phase = np.exp(1j * rng.uniform(0.0, 2 * math.pi))
            w1 = GrassmannVector(math.sqrt(lam2) * u1 + phase * math.sqrt(lam1) * u2)
            w2 = GrassmannVector(math.sqrt(lam2) * u1 - phase * math.sqrt(lam1) * u2)
            assert d_sigma(s, w1, w2) == pytest.approx(1.0, abs=1e-8)

    def test_triangle_inequality_fails(self):
        sigma = Covariance(np.diag([20.0, 1.0]))
        w1 = GrassmannVector([1 / math.sqrt(3), math.sqrt(2 / 3)])
        w2 = GrassmannVector([1 / math.sqrt(2), -1 / math.sqrt(2)])
        w3 = GrassmannVector([-math.sqrt(3.3 / 7), math.sqrt(3.7 / 7)])
        direct = d_sigma(sigma, w1, w3)
        path = d_sigma(sigma, w1, w2) + d_sigma(sigma, w2, w3)
        assert direct / 2 == pytest.approx(0.2536, abs=5e-5)
        assert path / 2 == pytest.approx(0.2534, abs=5e-5)
        assert direct > path

    def test_abc_values_broadcast(self, sigma_better, rng):
        s1, _ = sigma_better
        W1, W2 = random_grassmann(rng, 2, count=4), random_grassmann(rng, 2, count=4)
        a, b, c = abc_values(s1, W1, W2)
        assert a.shape == b.shape == c.shape == (4,)
        assert np.all(c ** 2 <= a * b * (1 + 1e-12))

    def test_condition_number(self):
        assert condition_number(Covariance(np.diag([3.0, 0.5]))) == pytest.approx(6.0)
        with pytest.raises(SingularMatrixError):
            condition_number(Covariance([[1.0, 1.0], [1.0, 1.0]]))


class TestRandomFixtures:
    def test_random_covariance_is_trace_normalized(self, rng):
        s = random_covariance(rng, dim=3)
        assert s.trace_normalized
        assert np.all(np.linalg.eigvalsh(s.matrix) > 0)
