"""
Набор приёмочных проверок: каждая замкнутая формула сверяется с независимым
эталоном (квадратура, моделирование, опубликованные числовые примеры).
"""
import logging
import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from data.config import Config
from services.beamform import (
    BeamformerPair,
    WeightedObjective,
    candidate_pair,
    grassmann_search,
    optimal_common_eigenbasis,
    optimal_high_snr,
    optimal_low_snr,
    optimal_single_user,
    optimize_alpha_beta,
    optimize_weighted,
)
from services.density import WeightSpectrum, weighted_norm_cdf, weighted_norm_pdf
from services.montecarlo import McConfig, empirical_rate, empirical_rates, ks_distance, weighted_norm_samples
from services.rates import (
    abc_coefficients,
    ergodic_rate_general_m,
    ergodic_rate_m_user,
    ergodic_rate_three_user,
    ergodic_rate_two_user,
    rate_high_snr_limit,
    sum_rate,
    user_spectra,
)
from utils.errors import BoundaryError, ValidationFailure
from utils.helpers import db_to_linear
from utils.linalg import (
    Covariance,
    GrassmannVector,
    d_sigma,
    generalized_eig,
    random_covariance,
    random_grassmann,
    tau_coefficients,
)
from utils.specfun import h, kappa_log_ratio

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def h_by_quadrature(x):
    """h(x) = ∫₀^∞ e^(−s)/(s + 1/x) ds"""
    t = 1.0 / x

    def integrand(s):
        return math.exp(-s) / (s + t)

    head, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200,
                             points=[t] if t < 1.0 else None)
    tail, _ = integrate.quad(integrand, 1.0, np.inf, epsabs=0.0, epsrel=1e-13, limit=200)
    return head + tail


class AcceptanceSuite:
    def __init__(self, seed=None, samples=None, cdf_samples=None, search_samples=None, workers=None):
        self.seed = Config.SEED if seed is None else seed
        self.samples = samples or Config.MC_SAMPLES
        self.cdf_samples = cdf_samples or Config.CDF_SAMPLES
        self.search_samples = search_samples or Config.SEARCH_SAMPLES
        self.workers = workers or Config.MC_WORKERS
        self.k_se = Config.SE_MULTIPLIER
        self.k_se_batch = Config.SE_MULTIPLIER_BATCH
        self.templates = Config.SCENARIO_TEMPLATES

    def _mc(self, n=None, offset=0):
        n = n or self.samples
        return McConfig(n_samples=n, seed=self.seed + offset, batch=min(Config.MC_BATCH, n), workers=self.workers)

    def _fixture(self, name):
        template = self.templates[name]
        return Covariance.from_pairs(template["sigma1"]), Covariance.from_pairs(template["sigma2"])

    def _rng(self, offset):
        return np.random.default_rng([self.seed, offset])

    def check_special_functions(self):
        xs = np.logspace(-3.0, 3.0, 200)
        worst = 0.0
        for x in xs:
            ref = h_by_quadrature(x)
            worst = max(worst, abs(float(h(x)) - ref) / ref)
        grid = np.logspace(-6.0, 6.0, 400)
        hx = np.asarray(h(grid))
        chain = (grid / (1 + 2 * grid) <= 0.5 * np.log1p(2 * grid) + 1e-15) & \
                (0.5 * np.log1p(2 * grid) <= hx * (1 + 1e-14)) & \
                (hx <= np.log1p(grid) * (1 + 1e-14)) & (np.log1p(grid) <= grid)
        return worst <= 1e-10 and bool(np.all(chain)), f"max rel. error {worst:.2e}, bounds ok={bool(np.all(chain))}"

    def check_density(self):
        details, passed = [], True
        for k, lambdas in enumerate(Config.CDF_CASES):
            spec = WeightSpectrum(lambdas)
            samples = weighted_norm_samples(spec, self._mc(self.cdf_samples, offset=100 + k))
            ks = ks_distance(samples, lambda y: weighted_norm_cdf(spec, y))
            lo, hi = spec.support
            mass, _ = integrate.quad(lambda y: weighted_norm_pdf(spec, y), lo, hi,
                                     points=list(spec.lambdas[1:-1]), epsabs=1e-13, epsrel=1e-13)
            passed &= ks <= 0.01 and abs(mass - 1.0) <= 1e-8
            details.append(f"M={spec.dim}: KS={ks:.4f}, ∫p={mass:.10f}")
        return passed, "; ".join(details)

    def check_two_user_oracle(self):
        s1, s2 = self._fixture("better_conditioned")
        pair = candidate_pair(1.0, 1.0, s1, s2)
        passed, worst = True, 0.0
        for k, rho in enumerate((0.1, 1.0, 10.0, 100.0)):
            estimates = empirical_rate(s1, s2, pair, rho, self._mc(offset=200 + k))
            closed = sum_rate(s1, s2, pair, rho).per_user
            for est, value in zip(estimates, closed):
                passed &= est.agrees_with(value, self.k_se)
                worst = max(worst, abs(est.mean - value) / max(est.std_error, 1e-300))
        rng = self._rng(3)
        for k in range(20):
            a, b = random_covariance(rng), random_covariance(rng)
            w = random_grassmann(rng, 2, count=2)
            fixture_pair = BeamformerPair(GrassmannVector(w[0]), GrassmannVector(w[1]))
            rho = float(10.0 ** rng.uniform(-1.0, 2.0))
            estimates = empirical_rate(a, b, fixture_pair, rho, self._mc(offset=300 + k))
            closed = sum_rate(a, b, fixture_pair, rho).per_user
            for est, value in zip(estimates, closed):
                passed &= est.agrees_with(value, self.k_se_batch)
                worst = max(worst, abs(est.mean - value) / max(est.std_error, 1e-300))
        return passed, f"max deviation {worst:.2f} SE"

    def check_tau_fixtures(self):
        s2 = Covariance.from_pairs(Config.SIGMA_2_COMMON)
        expected = {
            "common_basis_positive": (5.8, 0.1184, 3.2222, 0.5918, 1.0),
            "common_basis_negative": (1.0653, 0.6444, 0.5918, 3.2222, 1.0),
            # опубликованные η соответствуют нормировке Tr(Σ₁) = 2
            "common_basis_equal_tau": (1.4603, 0.5397, 1.90725, 1.90725, 2.0),
        }
        passed, details = True, []
        for name, (eta1, eta2, tau1, tau2, scale) in expected.items():
            s1 = Covariance.from_pairs(self.templates[name]["sigma1"])
            etas = generalized_eig(s1.scaled(scale), s2).values
            t1, t2, _ = tau_coefficients(generalized_eig(s1, s2), s2)
            got = (etas[0], etas[1], t1, t2)
            ok = all(math.isclose(g_, e_, rel_tol=1e-3) for g_, e_ in zip(got, (eta1, eta2, tau1, tau2)))
            passed &= ok
            details.append(f"{name}: " + ", ".join(f"{v:.4f}" for v in got))
        return passed, "; ".join(details)

    def check_triangle_counterexample(self):
        sigma = Covariance(np.diag([20.0, 1.0]))
        w1 = GrassmannVector([1 / math.sqrt(3), math.sqrt(2 / 3)])
        w2 = GrassmannVector([1 / math.sqrt(2), -1 / math.sqrt(2)])
        w3 = GrassmannVector([-math.sqrt(3.3 / 7), math.sqrt(3.7 / 7)])
        d13 = d_sigma(sigma, w1, w3)
        path = d_sigma(sigma, w1, w2) + d_sigma(sigma, w2, w3)
        # опубликованные значения равны d_Σ/2
        ok = abs(d13 / 2 - 0.2536) <= 5e-5 and abs(path / 2 - 0.2534) <= 5e-5 and d13 > path
        return ok, f"d(w1,w3)/2={d13 / 2:.4f}, (d(w1,w2)+d(w2,w3))/2={path / 2:.4f}"

    def check_high_snr_optimum(self):
        rng = self._rng(6)
        passed, worst_rel, worst_excess = True, 0.0, -np.inf
        for _ in range(20):
            a, b = random_covariance(rng), random_covariance(rng)
            pair, _ = optimal_high_snr(a, b)
            finite = sum_rate(a, b, pair, 1e5).sum
            worst_rel = max(worst_rel, abs(finite - pair.value) / pair.value)
            W = random_grassmann(rng, 2, count=1000)
            for w1, w2 in zip(W[:500], W[500:]):
                g1, g2 = GrassmannVector(w1), GrassmannVector(w2)
                try:
                    limit = rate_high_snr_limit(abc_coefficients(a, g1, g2)) + \
                        rate_high_snr_limit(abc_coefficients(b, g2, g1))
                except BoundaryError:
                    continue
                worst_excess = max(worst_excess, limit - pair.value)
        passed = worst_rel <= 0.01 and worst_excess <= 1e-9
        return passed, f"max rel. gap at ρ=1e5 {worst_rel:.2e}, max excess {worst_excess:.2e}"

    def check_common_eigenbasis(self):
        cases = [(np.diag([3.0, 1.0]), np.diag([1.5, 1.0]), True), (np.diag([1.5, 1.0]), np.diag([4.0, 1.0]), False)]
        passed = True
        for m1, m2, first_branch in cases:
            s1, s2 = Covariance(m1), Covariance(m2)
            pair = optimal_common_eigenbasis(s1, s2)
            e1 = GrassmannVector([1.0, 0.0])
            w1_is_u1 = pair.w1.overlap(e1) > 1 - 1e-12
            limit, _ = optimal_high_snr(s1, s2)
            passed &= (w1_is_u1 == first_branch) and abs(limit.value - pair.value) <= 1e-10
        return passed, "оба порядка χ проверены"

    def check_alpha_beta_search(self):
        passed, worst = True, np.inf
        for name in ("better_conditioned", "worse_conditioned"):
            s1, s2 = self._fixture(name)
            for k, rho in enumerate(db_to_linear(Config.SNR_DB_GRID)):
                best = optimize_alpha_beta(s1, s2, rho)
                search = grassmann_search(s1, s2, rho, self.search_samples, self.seed + k)
                worst = min(worst, best.achieved - search.achieved)
            low = optimal_low_snr(s1, s2)
            tiny = optimize_alpha_beta(s1, s2, 1e-4).achieved - sum_rate(s1, s2, low, 1e-4).sum
            high, _ = optimal_high_snr(s1, s2)
            # при большом ρ поиск совпадает с предельной парой, взятой при том же ρ
            huge = optimize_alpha_beta(s1, s2, 1e5).achieved - sum_rate(s1, s2, high, 1e5).sum
            passed &= tiny >= -1e-12 and tiny <= 1e-6 and -1e-6 <= huge <= 1e-3
        passed &= worst >= -0.01
        return passed, f"min(optimized − search) = {worst:.4f}"

    def check_single_user(self):
        rng = self._rng(9)
        worst = 0.0
        for _ in range(10):
            s = random_covariance(rng)
            pair = optimal_single_user(s, "high")
            rate = ergodic_rate_two_user(s, pair.w1, pair.w2, 1e5)
            worst = max(worst, abs(rate - pair.value) / pair.value)
        unit = float(kappa_log_ratio(1.0))
        return worst <= 0.01 and unit == 1.0, f"max rel. gap {worst:.2e}, χ=1 → {unit}"

    def check_weighted(self):
        template = self.templates["weighted_first"]
        s1, s2 = Covariance.from_pairs(template["sigma1"]), Covariance.from_pairs(template["sigma2"])
        worst = np.inf
        for zeta in ((1.0, 0.5), (0.2, 0.8)):
            obj = WeightedObjective(*zeta)
            for k, rho in enumerate(db_to_linear(Config.SNR_DB_GRID)):
                best = optimize_weighted(s1, s2, rho, obj)
                search = grassmann_search(s1, s2, rho, self.search_samples, self.seed + k, obj=obj)
                worst = min(worst, best.achieved - search.achieved)
        return worst >= -0.02, f"min(optimized − search) = {worst:.4f}"

    def check_general_m(self):
        rng = self._rng(11)
        worst = 0.0
        for _ in range(10):
            s = random_covariance(rng)
            w = [GrassmannVector(v) for v in random_grassmann(rng, 2, count=2)]
            signal, intf = user_spectra(s, w, 0)
            general = ergodic_rate_general_m(signal, intf, 1.0, 2)
            worst = max(worst, abs(general - ergodic_rate_two_user(s, w[0], w[1], 1.0)))
            s3 = random_covariance(rng, 3)
            w3 = [GrassmannVector(v) for v in random_grassmann(rng, 3, count=3)]
            worst = max(worst, abs(ergodic_rate_m_user(s3, w3, 0, 1.0) - ergodic_rate_three_user(s3, *w3, 1.0)))
        sigma4 = Covariance(np.diag([4.0, 3.0, 2.0, 1.0]))
        beams = [GrassmannVector(np.eye(4)[k]) for k in range(4)]
        closed = ergodic_rate_general_m(WeightSpectrum([4, 3, 2, 1]), WeightSpectrum([3, 2, 1, 0]), 2.0, 4)
        estimate = empirical_rates([sigma4] * 4, beams, 2.0, self._mc(offset=400))[0]
        ok = worst <= 1e-10 and estimate.agrees_with(closed, self.k_se)
        return ok, f"max identity gap {worst:.2e}, M=4: {closed:.6f} vs {estimate.mean:.6f} ± {estimate.std_error:.1e}"

    def checks(self):
        return [
            ("special_functions", self.check_special_functions),
            ("density", self.check_density),
            ("two_user_oracle", self.check_two_user_oracle),
            ("tau_fixtures", self.check_tau_fixtures),
            ("triangle_counterexample", self.check_triangle_counterexample),
            ("high_snr_optimum", self.check_high_snr_optimum),
            ("common_eigenbasis", self.check_common_eigenbasis),
            ("alpha_beta_search", self.check_alpha_beta_search),
            ("single_user", self.check_single_user),
            ("weighted", self.check_weighted),
            ("general_m", self.check_general_m),
        ]

    def run(self, only=None):
        """
        Выполняет проверки по очереди

        Returns:
            list: CheckResult для каждой проверки

        Raises:
            ValidationFailure: если хотя бы одна проверка не пройдена
        """
        results = []
        for name, check in self.checks():
            if only and name not in only:
                continue
            started = time.perf_counter()
            passed, detail = check()
            result = CheckResult(name, bool(passed), detail, time.perf_counter() - started)
            level = logging.INFO if result.passed else logging.ERROR
            logger.log(level, "%s %s: %s (%.1f с)", "OK " if result.passed else "FAIL", name, detail, result.seconds)
            results.append(result)
        failed = [r.name for r in results if not r.passed]
        if failed:
            raise ValidationFailure(failed)
        return results
