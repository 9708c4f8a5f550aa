import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from services.validator import h_by_quadrature
from utils.errors import DomainError
from utils.specfun import (
    EULER_GAMMA,
    PositiveReal,
    exp_integral_e1,
    f,
    g,
    h,
    h_prime,
    kappa_log_ratio,
    log_ratio,
    scaled_exp_integral_e1,
)


class TestExpIntegral:
    @pytest.mark.parametrize("x", [1e-6, 0.01, 0.5, 1.0, 1.5, 7.0, 40.0, 300.0])
    def test_matches_scipy(self, x):
        assert exp_integral_e1(x) == pytest.approx(float(special.exp1(x)), rel=1e-11)

    def test_scaled_form_matches_scipy(self):
        t = np.array([0.2, 1.0, 3.0, 50.0, 600.0])
        expected = np.exp(t) * special.exp1(t)
        np.testing.assert_allclose(scaled_exp_integral_e1(t), expected, rtol=1e-11)

    def test_scaled_form_does_not_overflow(self):
        # e^t переполняется, произведение остаётся ≈ 1/t
        value = scaled_exp_integral_e1(1e4)
        assert value == pytest.approx(1.0 / (1e4 + 1.0), rel=1e-7)

    @pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
    def test_rejects_non_positive(self, bad):
        with pytest.raises(DomainError):
            exp_integral_e1(bad)


class TestH:
    @pytest.mark.parametrize("x", np.logspace(-3.0, 3.0, 13))
    def test_matches_quadrature(self, x):
        assert h(x) == pytest.approx(h_by_quadrature(x), rel=1e-10)

    def test_matches_scipy_on_grid(self):
        x = np.logspace(-2.0, 4.0, 50)
        t = 1.0 / x
        np.testing.assert_allclose(h(x), np.exp(t) * special.exp1(t), rtol=1e-11)

    def test_scalar_and_array_shapes(self):
        assert isinstance(h(2.0), float)
        assert h(np.ones((3, 2))).shape == (3, 2)
        assert h(PositiveReal(2.0)) == h(2.0)

    def test_small_argument_expansion(self):
        x = 1e-3
        assert h(x) == pytest.approx(x - x ** 2 + 2 * x ** 3 - 6 * x ** 4, rel=1e-9)

    def test_large_argument_asymptotic(self):
        x = 1e9
        assert h(x) == pytest.approx(math.log(x) - EULER_GAMMA, rel=1e-8)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(min_value=1e-6, max_value=1e6, allow_nan=False, allow_infinity=False))
    def test_bound_chain(self, x):
        half_log = 0.5 * math.log1p(2.0 * x)
        value = h(x)
        assert x / (1.0 + 2.0 * x) <= half_log * (1 + 1e-14)
        assert half_log <= value * (1 + 1e-13)
        assert value <= math.log1p(x) * (1 + 1e-13)
        assert math.log1p(x) <= x

    @pytest.mark.parametrize("bad", [0.0, -0.5])
    def test_rejects_non_positive(self, bad):
        with pytest.raises(DomainError):
            h(bad)

    def test_rejects_array_with_zero(self):
        with pytest.raises(DomainError):
            h(np.array([1.0, 0.0]))


class TestHPrime:
    @pytest.mark.parametrize("x", [0.01, 0.3, 1.0, 5.0, 100.0])
    def test_matches_finite_difference(self, x):
        step = 1e-5 * x
        numeric = (h(x + step) - h(x - step)) / (2.0 * step)
        assert h_prime(x) == pytest.approx(numeric, rel=1e-6)

    def test_continuous_across_asymptotic_switch(self):
        below, above = h_prime(1e-3 * (1 - 1e-9)), h_prime(1e-3 * (1 + 1e-9))
        assert below == pytest.approx(above, rel=1e-8)

    def test_small_argument_limit(self):
        # h'(x) → 1 − 2x при x → 0
        assert h_prime(1e-6) == pytest.approx(1.0 - 2e-6, rel=1e-10)

    def test_positive_and_decreasing(self):
        x = np.logspace(-4.0, 4.0, 200)
        values = h_prime(x)
        assert np.all(values > 0)
        assert np.all(np.diff(values) < 0)


class TestFG:
    def test_f_bounds(self):
        z = np.linspace(0.01, 0.99, 99)
        values = f(z)
        assert np.all(values >= 2.0)
        assert np.all(values <= 2.0 / z ** 2)

    def test_f_decreasing(self):
        z = np.linspace(0.01, 0.999, 200)
        assert np.all(np.diff(f(z)) < 0)

    def test_f_continuous_at_series_switch(self):
        z_switch = math.sqrt(1.0 - 1e-6)
        assert f(z_switch * (1 - 1e-12)) == pytest.approx(f(z_switch * (1 + 1e-12)), rel=1e-10)

    def test_f_limit_at_one(self):
        assert f(1.0 - 1e-12) == pytest.approx(2.0, rel=1e-10)

    @pytest.mark.parametrize("z", [0.05, 0.3, 0.7, 0.95])
    def test_g_identity(self, z):
        assert g(z) == pytest.approx(f(z) + 2.0 * math.log(z), rel=1e-12)

    def test_g_at_one(self):
        assert g(1.0) == 2.0

    @pytest.mark.parametrize("z", [0.0, 1.0, 1.2, -0.3])
    def test_f_domain(self, z):
        with pytest.raises(DomainError):
            f(z)

    @pytest.mark.parametrize("z", [0.0, 1.0000001])
    def test_g_domain(self, z):
        with pytest.raises(DomainError):
            g(z)


class TestKappaRatios:
    def test_removable_singularity(self):
        assert kappa_log_ratio(1.0) == 1.0
        assert log_ratio(1.0) == 1.0

    def test_series_matches_direct_form_near_one(self):
        kappa = 1.0 + 2e-6
        assert kappa_log_ratio(1.0 + 9.9e-7) == pytest.approx(kappa_log_ratio(kappa), abs=1e-6)
        assert kappa_log_ratio(kappa) == pytest.approx(kappa * math.log(kappa) / (kappa - 1.0), rel=1e-9)

    @given(st.floats(min_value=1e-3, max_value=1e3, allow_nan=False))
    def test_reciprocal_symmetry(self, kappa):
        assert kappa_log_ratio(1.0 / kappa) == pytest.approx(log_ratio(kappa), rel=1e-9)

    @given(st.floats(min_value=1e-3, max_value=1e3, allow_nan=False))
    def test_ratio_relation(self, kappa):
        assert log_ratio(kappa) * kappa == pytest.approx(kappa_log_ratio(kappa), rel=1e-12)

    def test_rejects_non_positive(self):
        with pytest.raises(DomainError):
            kappa_log_ratio(0.0)


class TestPositiveReal:
    def test_accepts_positive(self):
        assert float(PositiveReal(3.5)) == 3.5

    @pytest.mark.parametrize("bad", [0.0, -2.0, float("nan"), float("inf")])
    def test_rejects_invalid(self, bad):
        with pytest.raises(DomainError):
            PositiveReal(bad)
