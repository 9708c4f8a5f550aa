"""
Моделирование коррелированного релеевского канала и эмпирические оценки
скоростей и функций распределения, независимая проверка замкнутых формул.

Выборка разбивается на куски фиксированного размера, у каждого куска свой
поток Philox из SeedSequence(seed); итог не зависит от числа потоков.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List

import numpy as np
from scipy import stats

from utils.errors import DimensionError, DomainError
from utils.linalg import sqrtm_psd
from utils.specfun import PositiveReal

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class McConfig:
    """Настройки моделирования: объём выборки, зерно, размер куска, число потоков"""

    n_samples: int = 1_000_000
    seed: int = 20240607
    batch: int = 100_000
    workers: int = 4

    def __post_init__(self):
        if self.n_samples < 1:
            raise DomainError("n_samples должно быть ≥ 1")
        if self.batch < 1:
            raise DomainError("batch должен быть ≥ 1")
        # кусок не больше всей выборки
        object.__setattr__(self, "batch", min(int(self.batch), int(self.n_samples)))
        object.__setattr__(self, "workers", max(1, int(self.workers)))

    @property
    def chunk_sizes(self):
        full, rest = divmod(self.n_samples, self.batch)
        return [self.batch] * full + ([rest] if rest else [])

    def with_samples(self, n_samples):
        return McConfig(n_samples=n_samples, seed=self.seed, batch=min(self.batch, n_samples), workers=self.workers)


@dataclass(frozen=True)
class EstimateWithError:
    mean: float
    std_error: float
    n: int

    def agrees_with(self, value, k_se=3.0, floor=1e-12):
        """|mean − value| ≤ k·SE (с минимальным допуском floor)"""
        return abs(self.mean - value) <= k_se * self.std_error + floor


def _streams(seed, count, branch=0):
    """Независимые генераторы кусков для ветви branch (например, пользователя)"""
    root = np.random.SeedSequence(seed)
    branch_ss = root.spawn(branch + 1)[branch]
    return [np.random.Generator(np.random.Philox(child)) for child in branch_ss.spawn(count)]


def map_chunks(fn, items, workers):
    if workers == 1 or len(items) == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _combine(parts):
    """Объединяет (n, mean, M2) кусков в фиксированном порядке"""
    n_tot, mean_tot, m2_tot = 0, 0.0, 0.0
    for n, mean, m2 in parts:
        if n == 0:
            continue
        delta = mean - mean_tot
        total = n_tot + n
        mean_tot += delta * n / total
        m2_tot += m2 + delta * delta * n_tot * n / total
        n_tot = total
    return n_tot, mean_tot, m2_tot


def _estimate(parts):
    n, mean, m2 = _combine(parts)
    variance = m2 / (n - 1) if n > 1 else 0.0
    return EstimateWithError(mean=float(mean), std_error=float(math.sqrt(variance / n)), n=int(n))


def complex_gaussian(stream, shape):
    """Стандартные комплексные гауссовские величины: дисперсия ½ у каждой компоненты"""
    return (stream.standard_normal(shape) + 1j * stream.standard_normal(shape)) / math.sqrt(2.0)


def sample_channels(Sigma, stream, n):
    """
    n реализаций канала h = Σ^{1/2} g

    Returns:
        np.ndarray: Массив формы (n, M)
    """
    root = sqrtm_psd(Sigma).matrix
    return complex_gaussian(stream, (n, Sigma.dim)) @ root.T


def sample_channel(Sigma, stream):
    """Одна реализация канала h = Σ^{1/2} g, E[hh^H] = Σ"""
    return sample_channels(Sigma, stream, 1)[0]


def _user_rate_chunk(root, W, user, rho, m):
    def run(args):
        stream, size = args
        G = complex_gaussian(stream, (size, m))
        H = G @ root.T
        gains = np.abs(np.conj(H) @ W) ** 2 * (rho / m)
        interference = gains.sum(axis=1) - gains[:, user]
        values = np.log1p(gains[:, user] / (1.0 + interference))
        mean = float(values.mean())
        return size, mean, float(((values - mean) ** 2).sum())

    return run


def empirical_rates(Sigmas, ws, rho, cfg):
    """
    Эмпирические эргодические скорости всех пользователей

    Args:
        Sigmas (list): Ковариации пользователей (Covariance)
        ws (list): Лучи пользователей (GrassmannVector)
        rho (float): SNR ρ, мощность делится поровну (ρ/M)
        cfg (McConfig): Настройки моделирования

    Returns:
        list: EstimateWithError для каждого пользователя
    """
    rho = float(PositiveReal(float(rho)))
    if len(Sigmas) != len(ws):
        raise DimensionError("число ковариаций и лучей должно совпадать")
    m = ws[0].dim
    W = np.column_stack([w.coords for w in ws])
    sizes = cfg.chunk_sizes
    estimates = []
    for user, Sigma in enumerate(Sigmas):
        root = sqrtm_psd(Sigma).matrix
        streams = _streams(cfg.seed, len(sizes), branch=user)
        parts = map_chunks(_user_rate_chunk(root, W, user, rho, m), list(zip(streams, sizes)), cfg.workers)
        estimates.append(_estimate(parts))
        logger.debug("пользователь %d: %.6f ± %.2e", user + 1, estimates[-1].mean, estimates[-1].std_error)
    return estimates


def empirical_rate(Sigma1, Sigma2, pair, rho, cfg) -> List[EstimateWithError]:
    """Эмпирические E[R₁], E[R₂] для пары лучей"""
    return empirical_rates([Sigma1, Sigma2], [pair.w1, pair.w2], rho, cfg)


def isotropic_unit_vectors(stream, n, m):
    """Изотропные единичные векторы: нормированные комплексные гауссовские"""
    G = complex_gaussian(stream, (n, m))
    return G / np.linalg.norm(G, axis=1, keepdims=True)


def weighted_norm_samples(spec, cfg):
    """
    Выборка ĥ^H Λ ĥ для изотропных единичных ĥ

    Returns:
        np.ndarray: cfg.n_samples значений
    """
    lam = spec.lambdas
    sizes = cfg.chunk_sizes
    streams = _streams(cfg.seed, len(sizes))

    def run(args):
        stream, size = args
        U = isotropic_unit_vectors(stream, size, lam.size)
        return (np.abs(U) ** 2) @ lam

    return np.concatenate(map_chunks(run, list(zip(streams, sizes)), cfg.workers))


def empirical_weighted_norm_cdf(spec, cfg, grid):
    """
    Эмпирическая функция распределения ĥ^H Λ ĥ в точках сетки

    Returns:
        list: Пары (y, F̂(y))
    """
    grid = np.asarray(grid, dtype=float)
    samples = np.sort(weighted_norm_samples(spec, cfg))
    counts = np.searchsorted(samples, grid, side="right")
    return [(float(y), float(c) / samples.size) for y, c in zip(grid, counts)]


def ks_distance(samples, cdf):
    """Статистика Колмогорова-Смирнова между выборкой и аналитической функцией распределения"""
    return float(stats.kstest(np.asarray(samples, dtype=float), cdf).statistic)
