"""
Плотность и функция распределения взвешенной нормы ĥ^H Λ ĥ
изотропного единичного вектора ĥ для M = 2, 3, 4.
"""
import logging
from dataclasses import dataclass

import numpy as np

from utils.errors import DegenerateSpectrumError, DimensionError, DomainError

logger = logging.getLogger(__name__)

# Относительная щель, ниже которой собственные значения считаются совпадающими
TIE_TOL = 1e-9
# Относительный разнос совпадающих значений при возмущении
TIE_SPREAD = 1e-7
SUPPORTED_DIMS = (2, 3, 4)


@dataclass(frozen=True, eq=False)
class WeightSpectrum:
    """Спектр весов Λ₁ ≥ … ≥ Λ_M ≥ 0"""

    lambdas: np.ndarray

    def __post_init__(self):
        lam = np.array(self.lambdas, dtype=float).ravel()
        if lam.size < 2:
            raise DimensionError("спектр должен содержать не менее двух значений")
        lam = np.where((lam < 0) & (lam > -1e-12 * max(np.max(np.abs(lam)), 1e-300)), 0.0, lam)
        if np.any(lam < 0) or not np.any(lam > 0):
            raise DomainError(f"спектр должен быть неотрицательным и ненулевым: {lam}")
        lam = np.sort(lam)[::-1].copy()
        lam.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)

    @property
    def dim(self):
        return self.lambdas.size

    @property
    def support(self):
        return float(self.lambdas[-1]), float(self.lambdas[0])

    def has_ties(self):
        lam = self.lambdas
        return bool(np.any(lam[:-1] - lam[1:] <= TIE_TOL * lam[0]))


def perturb_ties(spec):
    """
    Разносит совпадающие значения спектра на относительную величину 1e-7

    След сохраняется: внутри группы сдвиги симметричны, для группы нулей
    сдвиг вверх компенсируется пропорциональным сжатием остальных значений.

    Args:
        spec (WeightSpectrum): Исходный спектр

    Returns:
        WeightSpectrum: Спектр с попарно различными значениями
    """
    if not spec.has_ties():
        return spec
    lam = spec.lambdas.copy()
    top = lam[0]
    step = TIE_SPREAD * top
    groups = []
    start = 0
    for k in range(1, lam.size + 1):
        if k == lam.size or lam[k - 1] - lam[k] > TIE_TOL * top:
            groups.append((start, k))
            start = k
    compensation = 0.0
    for begin, end in groups:
        size = end - begin
        if size == 1:
            continue
        if lam[begin] <= (size - 1) * step:
            # группа нулей: сдвиг только вверх
            offsets = step * np.arange(size - 1, -1, -1, dtype=float)
            compensation += offsets.sum()
            zero_group = (begin, end)
        else:
            offsets = step * ((size - 1) / 2.0 - np.arange(size, dtype=float))
        lam[begin:end] = lam[begin:end] + offsets
    if compensation > 0:
        # остальные значения сжимаются пропорционально, порядок сохраняется
        rest = np.ones(lam.size, dtype=bool)
        rest[zero_group[0]:zero_group[1]] = False
        lam[rest] *= 1.0 - compensation / lam[rest].sum()
    logger.debug("спектр с совпадениями %s возмущён до %s", spec.lambdas, lam)
    return WeightSpectrum(lam)


def _require_distinct(spec):
    if spec.dim not in SUPPORTED_DIMS:
        raise DimensionError(f"плотность задана только для M ∈ {SUPPORTED_DIMS}, получено M = {spec.dim}")
    if spec.has_ties():
        raise DegenerateSpectrumError(f"совпадающие значения спектра {spec.lambdas}; используйте perturb_ties")


def _pdf_pieces(lam, y):
    """Кусочная плотность на носителе (Λ_M, Λ₁]; в узлах берётся левый кусок"""
    m = lam.size
    out = np.zeros_like(y)
    if m == 2:
        inside = (y > lam[1]) & (y <= lam[0])
        out[inside] = 1.0 / (lam[0] - lam[1])
    elif m == 3:
        l1, l2, l3 = lam
        left = (y > l3) & (y <= l2)
        right = (y > l2) & (y <= l1)
        out[left] = 2.0 * (y[left] - l3) / ((l1 - l3) * (l2 - l3))
        out[right] = 2.0 * (l1 - y[right]) / ((l1 - l2) * (l1 - l3))
    else:
        l1, l2, l3, l4 = lam
        left = (y > l4) & (y <= l3)
        mid = (y > l3) & (y <= l2)
        right = (y > l2) & (y <= l1)
        out[left] = 3.0 * (y[left] - l4) ** 2 / ((l1 - l4) * (l2 - l4) * (l3 - l4))
        ym = y[mid]
        middle_term = (ym - l3) * (l2 - ym) / (l2 - l3) + (ym - l4) * (l1 - ym) / (l1 - l4)
        out[mid] = 3.0 * middle_term / ((l1 - l3) * (l2 - l4))
        out[right] = 3.0 * (l1 - y[right]) ** 2 / ((l1 - l2) * (l1 - l3) * (l1 - l4))
    return out


def weighted_norm_pdf(spec, y):
    """
    Плотность p(y) величины ĥ^H Λ ĥ

    Args:
        spec (WeightSpectrum): Различные значения Λ, M ∈ {2, 3, 4}
        y: Точка или массив точек

    Returns:
        Значение плотности (0 вне носителя)

    Raises:
        DegenerateSpectrumError: при совпадающих значениях спектра
    """
    _require_distinct(spec)
    arr = np.asarray(y, dtype=float)
    out = _pdf_pieces(spec.lambdas, np.atleast_1d(arr))
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def weighted_norm_cdf(spec, y):
    """
    Функция распределения F(y) = 1 − Σ_k (Λ_k − y)₊^(M−1) / Π_{j≠k}(Λ_k − Λ_j)

    Args:
        spec (WeightSpectrum): Различные значения Λ, M ∈ {2, 3, 4}
        y: Точка или массив точек

    Returns:
        F(y) ∈ [0, 1]
    """
    _require_distinct(spec)
    lam = spec.lambdas
    arr = np.asarray(y, dtype=float)
    flat = np.atleast_1d(arr)
    m = lam.size
    tail = np.zeros_like(flat)
    for k in range(m):
        others = np.delete(lam, k)
        denom = np.prod(lam[k] - others)
        tail = tail + np.clip(lam[k] - flat, 0.0, None) ** (m - 1) / denom
    out = np.clip(1.0 - tail, 0.0, 1.0)
    out[flat <= lam[-1]] = 0.0
    out[flat >= lam[0]] = 1.0
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)
