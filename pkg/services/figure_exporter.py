import csv
import json
import logging
import os

import numpy as np

from data.config import Config
from services.beamform import (
    ALPHA_BETA_GRID,
    WeightedObjective,
    angle_profile,
    fixed_high_snr_pair,
    grassmann_search,
    optimal_high_snr,
    optimal_low_snr,
    optimal_single_user,
    optimize_alpha_beta,
    optimize_weighted,
)
from services.density import WeightSpectrum, weighted_norm_cdf
from services.montecarlo import McConfig, empirical_weighted_norm_cdf
from services.rates import sum_rate
from utils.errors import OutputError
from utils.helpers import db_to_linear, format_row
from utils.specfun import f, g, h

logger = logging.getLogger(__name__)

CDF_COLUMNS = ["case", "y", "analytic", "empirical"]
HFUNC_COLUMNS = ["x", "h", "half_log_1p2x", "log_1px"]
FG_COLUMNS = ["z", "f", "g"]
SUMRATE_COLUMNS = ["snr_db", "optimized", "low_snr_pair", "high_snr_pair", "grassmann_search",
                   "fixed_alpha_beta", "alpha_star", "beta_star"]
ANGLES_COLUMNS = ["param", "cos_angle1", "cos_angle2"]
WEIGHTED_COLUMNS = ["snr_db", "optimized", "grassmann_search", "alpha_star", "beta_star", "gamma_star", "delta_star"]
SINGLE_USER_COLUMNS = ["snr_db", "user", "optimized", "single_user_low", "single_user_high", "grassmann_search",
                       "alpha_star", "beta_star", "gamma_star", "delta_star"]
BEAMS_FILE = "table1.json"

CDF_GRID_POINTS = 41
HFUNC_GRID = np.logspace(-3.0, 3.0, 61)
FG_GRID = np.linspace(0.025, 1.0, 40)
DEFAULT_WEIGHTS = WeightedObjective(1.0, 0.5)
# Режимы одного пользователя оптимизируют E[R_i]
MODE_OBJECTIVES = {
    "single_user_1": WeightedObjective(1.0, 0.0),
    "single_user_2": WeightedObjective(0.0, 1.0),
}


def objective_for(scenario):
    """Целевая функция по режиму сценария: E[R_i] для single_user_i, иначе веса сценария"""
    if scenario.mode in MODE_OBJECTIVES:
        return MODE_OBJECTIVES[scenario.mode]
    return scenario.weights or DEFAULT_WEIGHTS


def _pair_json(pair):
    return {
        "w1": [[float(v.real), float(v.imag)] for v in pair.w1.coords],
        "w2": [[float(v.real), float(v.imag)] for v in pair.w2.coords],
    }


class FigureExporter:
    """Строит таблицы для каждого рисунка и записывает их в CSV/JSON с заголовком конфигурации"""

    def __init__(self, out_dir=None, digits=None, search_samples=None):
        self.out_dir = out_dir or Config.OUTPUT_DIR
        self.digits = Config.CSV_DIGITS if digits is None else digits
        self.search_samples = Config.SEARCH_SAMPLES if search_samples is None else search_samples
        try:
            os.makedirs(self.out_dir, exist_ok=True)
        except OSError as e:
            raise OutputError(f"Каталог {self.out_dir} недоступен: {e.strerror or e}") from e
        if not os.access(self.out_dir, os.W_OK):
            raise OutputError(f"Нет прав на запись в {self.out_dir}")

    def _open(self, filename, **kwargs):
        path = os.path.join(self.out_dir, filename)
        try:
            return path, open(path, "w", encoding="utf-8", **kwargs)
        except OSError as e:
            raise OutputError(f"Ошибка при записи {path}: {e.strerror or e}") from e

    def write_csv(self, filename, fieldnames, rows, config):
        """Создает CSV: первая строка '# config: <json>', затем заголовок и строки"""
        path, csvfile = self._open(filename, newline="")
        with csvfile:
            csvfile.write("# config: " + json.dumps(config, sort_keys=True, ensure_ascii=False) + "\n")
            writer = csv.DictWriter(csvfile, fieldnames=fieldnames, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow(format_row(row, self.digits))
        logger.info("записан %s (%d строк)", path, len(rows))
        return path

    def write_json(self, filename, data, config):
        path, fh = self._open(filename)
        with fh:
            json.dump({"config": config, "result": data}, fh, sort_keys=True, ensure_ascii=False, indent=2)
            fh.write("\n")
        logger.info("записан %s", path)
        return path

    def cdf_rows(self, cases, mc):
        rows = []
        for lambdas in cases:
            spec = WeightSpectrum(lambdas)
            lo, hi = spec.support
            grid = np.linspace(lo, hi, CDF_GRID_POINTS)
            empirical = empirical_weighted_norm_cdf(spec, mc, grid)
            analytic = weighted_norm_cdf(spec, grid)
            label = "-".join(f"{v:g}" for v in spec.lambdas)
            for (y, emp), ana in zip(empirical, analytic):
                rows.append({"case": label, "y": y, "analytic": float(ana), "empirical": emp})
        return rows

    def export_cdf(self, config, mc, cases=None):
        cases = Config.CDF_CASES if cases is None else cases
        return self.write_csv("cdf.csv", CDF_COLUMNS, self.cdf_rows(cases, mc), config)

    def export_hfunc(self, config):
        rows = [
            {"x": float(x), "h": float(h(x)), "half_log_1p2x": 0.5 * float(np.log1p(2.0 * x)),
             "log_1px": float(np.log1p(x))}
            for x in HFUNC_GRID
        ]
        fg_rows = [{"z": float(z), "f": float(f(z)) if z < 1.0 else 2.0, "g": float(g(z))} for z in FG_GRID]
        return [
            self.write_csv("hfunc.csv", HFUNC_COLUMNS, rows, config),
            self.write_csv("fg.csv", FG_COLUMNS, fg_rows, config),
        ]

    def sumrate_rows(self, scenario):
        s1, s2 = scenario.sigma1, scenario.sigma2
        low = optimal_low_snr(s1, s2)
        high, _ = optimal_high_snr(s1, s2)
        fixed = fixed_high_snr_pair(s1, s2)
        rows = []
        for k, (snr_db, rho) in enumerate(zip(scenario.snr_db, db_to_linear(scenario.snr_db))):
            best = optimize_alpha_beta(s1, s2, rho)
            search = grassmann_search(s1, s2, rho, self.search_samples, scenario.mc.seed + k)
            rows.append({
                "snr_db": float(snr_db),
                "optimized": best.achieved,
                "low_snr_pair": sum_rate(s1, s2, low, rho).sum,
                "high_snr_pair": sum_rate(s1, s2, high, rho).sum,
                "grassmann_search": search.achieved,
                "fixed_alpha_beta": sum_rate(s1, s2, fixed, rho).sum,
                "alpha_star": best.params[0],
                "beta_star": best.params[1],
            })
            logger.info("SNR %.1f дБ: оптимум %.6f, поиск %.6f", snr_db, best.achieved, search.achieved)
        return rows

    def export_sumrate(self, scenario, config):
        return self.write_csv("sumrate.csv", SUMRATE_COLUMNS, self.sumrate_rows(scenario), config)

    def export_angles(self, scenario, config, params=None):
        params = ALPHA_BETA_GRID if params is None else params
        first = angle_profile(scenario.sigma1, scenario.sigma2, params, which=1)
        second = angle_profile(scenario.sigma1, scenario.sigma2, params, which=2)
        rows = [{"param": p, "cos_angle1": c1, "cos_angle2": c2} for (p, c1), (_, c2) in zip(first, second)]
        return self.write_csv("angles.csv", ANGLES_COLUMNS, rows, config)

    def weighted_rows(self, scenario, obj=None):
        obj = objective_for(scenario) if obj is None else obj
        s1, s2 = scenario.sigma1, scenario.sigma2
        rows = []
        for k, (snr_db, rho) in enumerate(zip(scenario.snr_db, db_to_linear(scenario.snr_db))):
            best = optimize_weighted(s1, s2, rho, obj)
            search = grassmann_search(s1, s2, rho, self.search_samples, scenario.mc.seed + k, obj=obj)
            alpha, beta, gamma, delta = best.params
            rows.append({
                "snr_db": float(snr_db), "optimized": best.achieved, "grassmann_search": search.achieved,
                "alpha_star": alpha, "beta_star": beta, "gamma_star": gamma, "delta_star": delta,
            })
        return rows

    def export_weighted(self, scenario, config):
        return self.write_csv("weighted.csv", WEIGHTED_COLUMNS, self.weighted_rows(scenario), config)

    def single_user_rows(self, scenario):
        """E[R_i] одного пользователя: поиск по (α, β, γ, δ) и пары u₁(Σ_i), u₂(Σ_i)"""
        user = 1 if scenario.mode == "single_user_1" else 2
        obj = MODE_OBJECTIVES[f"single_user_{user}"]
        s1, s2 = scenario.sigma1, scenario.sigma2
        own = s1 if user == 1 else s2
        low = optimal_single_user(own, "low", user=user)
        high = optimal_single_user(own, "high", user=user)
        rows = []
        for k, (snr_db, rho) in enumerate(zip(scenario.snr_db, db_to_linear(scenario.snr_db))):
            best = optimize_weighted(s1, s2, rho, obj)
            search = grassmann_search(s1, s2, rho, self.search_samples, scenario.mc.seed + k, obj=obj)
            alpha, beta, gamma, delta = best.params
            rows.append({
                "snr_db": float(snr_db), "user": user, "optimized": best.achieved,
                "single_user_low": obj.combine(*sum_rate(s1, s2, low, rho).per_user),
                "single_user_high": obj.combine(*sum_rate(s1, s2, high, rho).per_user),
                "grassmann_search": search.achieved,
                "alpha_star": alpha, "beta_star": beta, "gamma_star": gamma, "delta_star": delta,
            })
            logger.info("SNR %.1f дБ: E[R%d] %.6f, u₁/u₂ %.6f", snr_db, user, best.achieved,
                        rows[-1]["single_user_high"])
        return rows

    def export_single_user(self, scenario, config):
        return self.write_csv("single_user.csv", SINGLE_USER_COLUMNS, self.single_user_rows(scenario), config)

    def export_for_mode(self, scenario, config):
        """Таблица скоростей по режиму сценария: sumrate, weighted или single_user_i"""
        if scenario.mode == "sumrate":
            return self.export_sumrate(scenario, config)
        if scenario.mode == "weighted":
            return self.export_weighted(scenario, config)
        return self.export_single_user(scenario, config)

    def beam_structure(self, scenario, intermediate_db=0.0):
        """Структура оптимальных лучей при низком, промежуточном и высоком SNR"""
        s1, s2 = scenario.sigma1, scenario.sigma2
        rho_mid = float(db_to_linear(intermediate_db))
        low = optimal_low_snr(s1, s2)
        mid = optimize_alpha_beta(s1, s2, rho_mid)
        high, summary = optimal_high_snr(s1, s2)
        return {
            "low_snr": {**_pair_json(low), "sum_rate_slope": low.value, "degenerate": low.degenerate},
            "intermediate_snr": {**_pair_json(mid.pair), "snr_db": intermediate_db,
                                 "alpha": mid.params[0], "beta": mid.params[1], "sum_rate": mid.achieved},
            "high_snr": {**_pair_json(high), "sum_rate_limit": high.value,
                         "kappa1": summary.kappa1, "kappa2": summary.kappa2},
            "single_user_1": {**_pair_json(optimal_single_user(s1, "high", user=1)),
                              "rate_limit": optimal_single_user(s1, "high", user=1).value},
            "single_user_2": {**_pair_json(optimal_single_user(s2, "high", user=2)),
                              "rate_limit": optimal_single_user(s2, "high", user=2).value},
        }

    def export_beams(self, scenario, config):
        return self.write_json(BEAMS_FILE, self.beam_structure(scenario), config)


def cdf_config(mc):
    return {"cases": Config.CDF_CASES, "mc": {"n_samples": mc.n_samples, "seed": mc.seed, "batch": mc.batch}}


def default_cdf_mc(seed=None, samples=None):
    n = samples or Config.CDF_SAMPLES
    return McConfig(n_samples=n, seed=Config.SEED if seed is None else seed,
                    batch=min(Config.MC_BATCH, n), workers=Config.MC_WORKERS)
