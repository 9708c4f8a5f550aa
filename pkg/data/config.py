# Файл конфигурации: значения по умолчанию, переопределения из окружения (.env) и встроенные сценарии
import os
from typing import Dict

from dotenv import load_dotenv

load_dotenv()

ENV_PREFIX = "STATBEAM_"


def _env(name, default, cast=str):
    """Читает STATBEAM_<name> из окружения с приведением типа"""
    raw = os.getenv(ENV_PREFIX + name)
    if raw is None or raw == "":
        return default
    return cast(raw)


def _flag(raw):
    return raw.strip().lower() in ("1", "true", "yes", "on")


def _fixture(rows):
    """Матрица из пар (re, im) в виде, принятом в файлах сценариев"""
    return [[[float(re), float(im)] for re, im in row] for row in rows]


class Config:
    # Зерно генератора и объёмы моделирования
    SEED: int = _env("SEED", 20240607, int)
    MC_SAMPLES: int = _env("SAMPLES", _env("MC_SAMPLES", 1_000_000, int), int)
    CDF_SAMPLES: int = _env("CDF_SAMPLES", 100_000, int)
    MC_BATCH: int = _env("MC_BATCH", 100_000, int)
    MC_WORKERS: int = _env("MC_WORKERS", 4, int)
    SEARCH_SAMPLES: int = _env("SEARCH_SAMPLES", 2000, int)

    # Вывод
    OUTPUT_DIR: str = _env("OUT", _env("OUTPUT_DIR", "results"))
    CSV_DIGITS: int = _env("CSV_DIGITS", 12, int)
    LOG_LEVEL: str = _env("LOG_LEVEL", "INFO")
    QUIET: bool = _env("QUIET", False, _flag)

    # Допуск согласия с моделированием, в стандартных ошибках
    SE_MULTIPLIER: float = _env("SE_MULTIPLIER", 3.0, float)
    SE_MULTIPLIER_BATCH: float = _env("SE_MULTIPLIER_BATCH", 4.0, float)

    # Сетка SNR по умолчанию, дБ: 21 точка на [−10, 30]
    SNR_DB_GRID = [-10.0 + 2.0 * k for k in range(21)]

    # Ковариации из численных примеров
    SIGMA_1_BETTER = _fixture([[(1.7745, 0.0), (-0.5178, 0.0247)], [(-0.5178, -0.0247), (0.2255, 0.0)]])
    SIGMA_2_BETTER = _fixture([[(1.2522, 0.0), (-0.8739, -0.2711)], [(-0.8739, 0.2711), (0.7478, 0.0)]])
    SIGMA_1_WORSE = _fixture([[(1.3042, 0.0), (0.0543, -0.2540)], [(0.0543, 0.2540), (0.6958, 0.0)]])
    SIGMA_2_WORSE = _fixture([[(1.1161, 0.0), (-0.2195, 0.4340)], [(-0.2195, -0.4340), (0.8839, 0.0)]])
    SIGMA_2_COMMON = _fixture([[(1.0, 0.0), (-0.6897, 0.0)], [(-0.6897, 0.0), (1.0, 0.0)]])

    # Встроенные сценарии
    SCENARIO_TEMPLATES: Dict[str, dict] = {
        "better_conditioned": {
            "name": "Лучше обусловленный первый пользователь",
            "sigma1": SIGMA_1_BETTER,
            "sigma2": SIGMA_2_BETTER,
            "snr_db": SNR_DB_GRID,
            "weights": None,
            "mode": "sumrate",
        },
        "worse_conditioned": {
            "name": "Хуже обусловленный первый пользователь",
            "sigma1": SIGMA_1_WORSE,
            "sigma2": SIGMA_2_WORSE,
            "snr_db": SNR_DB_GRID,
            "weights": None,
            "mode": "sumrate",
        },
        "weighted_first": {
            "name": "Взвешенная сумма, ζ = (1, 0.5)",
            "sigma1": SIGMA_1_BETTER,
            "sigma2": SIGMA_2_BETTER,
            "snr_db": SNR_DB_GRID,
            "weights": {"zeta1": 1.0, "zeta2": 0.5},
            "mode": "weighted",
        },
        "weighted_second": {
            "name": "Взвешенная сумма, ζ = (0.2, 0.8)",
            "sigma1": SIGMA_1_BETTER,
            "sigma2": SIGMA_2_BETTER,
            "snr_db": SNR_DB_GRID,
            "weights": {"zeta1": 0.2, "zeta2": 0.8},
            "mode": "weighted",
        },
        "common_basis_positive": {
            "name": "Общий базис, положительная корреляция",
            "sigma1": _fixture([[(1.0, 0.0), (0.8, 0.0)], [(0.8, 0.0), (1.0, 0.0)]]),
            "sigma2": SIGMA_2_COMMON,
            "snr_db": SNR_DB_GRID,
            "weights": None,
            "mode": "sumrate",
        },
        "common_basis_negative": {
            "name": "Общий базис, отрицательная корреляция",
            "sigma1": _fixture([[(1.0, 0.0), (-0.8, 0.0)], [(-0.8, 0.0), (1.0, 0.0)]]),
            "sigma2": SIGMA_2_COMMON,
            "snr_db": SNR_DB_GRID,
            "weights": None,
            "mode": "sumrate",
        },
        "common_basis_equal_tau": {
            "name": "Равные τ₁ = τ₂",
            "sigma1": _fixture([[(2.0 / 3.0, 0.0), (-0.34485, 0.0)], [(-0.34485, 0.0), (1.0 / 3.0, 0.0)]]),
            "sigma2": SIGMA_2_COMMON,
            "snr_db": SNR_DB_GRID,
            "weights": None,
            "mode": "sumrate",
        },
    }

    # Наборы спектров для проверки плотностей
    CDF_CASES = [[2.0, 1.0], [3.0, 2.0, 1.0], [4.0, 3.0, 2.0, 1.0]]
