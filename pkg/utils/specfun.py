"""
Специальные функции на основе интегральной показательной функции E1:
ядро скорости h(x), функции f(z), g(z) и пределы вида κ·log κ/(κ−1).

Все функции принимают скаляр или numpy-массив и возвращают значение той же формы.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from utils.errors import DomainError

logger = logging.getLogger(__name__)

# Постоянная Эйлера-Маскерони (20 знаков)
EULER_GAMMA = 0.57721566490153286061

# Порог переключения ряд / цепная дробь для E1
SERIES_SWITCH = 1.0
# Ниже этого 1/x значение h берётся из логарифмической асимптотики E1
LOG_ASYMPTOTIC_T = 1e-8
# Выше этого 1/x производная h' берётся из асимптотического ряда
DERIV_ASYMPTOTIC_T = 1e3
# Порог ε = 1 − z² для ряда f, g вблизи z = 1
FG_SERIES_EPS = 1e-6
# Порог |κ − 1| для ряда Тейлора в пределах κ = 1
KAPPA_SERIES_EPS = 1e-6

_FPMIN = 1e-300
_EPS = 1e-16
_MAX_ITER = 1000


@dataclass(frozen=True)
class PositiveReal:
    """Строго положительное число (аргумент x функции h, мощность ρ)"""

    value: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value > 0):
            raise DomainError(f"ожидалось положительное число, получено {self.value}")

    def __float__(self):
        return float(self.value)


def _positive_array(x, name="x"):
    """Приводит аргумент к массиву float и проверяет x > 0"""
    if isinstance(x, PositiveReal):
        x = x.value
    arr = np.asarray(x, dtype=float)
    if arr.size and not (np.all(np.isfinite(arr)) and np.all(arr > 0)):
        raise DomainError(f"{name} должен быть > 0, получено {arr.min() if arr.size else arr}")
    return arr


def _shaped(out, like):
    """Возвращает float для скалярного входа и массив иначе"""
    if np.ndim(like) == 0:
        return float(out)
    return out


def _e1_series(t):
    """E1(t) степенным рядом, t ≤ 1"""
    total = np.zeros_like(t)
    term = np.ones_like(t)
    for k in range(1, 40):
        term = -term * t / k
        total = total - term / k
    return -EULER_GAMMA - np.log(t) + total


def _scaled_e1_cf(t):
    """exp(t)·E1(t) цепной дробью (модифицированный метод Лентца), t > 1"""
    b = t + 1.0
    c = np.full_like(t, 1.0 / _FPMIN)
    d = 1.0 / b
    result = d.copy()
    for i in range(1, _MAX_ITER + 1):
        an = -float(i * i)
        b = b + 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        result = result * delta
        if np.all(np.abs(delta - 1.0) < _EPS):
            break
    else:
        logger.warning("цепная дробь E1 не сошлась за %d итераций", _MAX_ITER)
    return result


def scaled_exp_integral_e1(t):
    """
    Вычисляет exp(t)·E1(t) без переполнения

    Args:
        t: Положительный аргумент (скаляр или массив)

    Returns:
        Значение exp(t)·E1(t)
    """
    arr = _positive_array(t, "t")
    flat = np.atleast_1d(arr).astype(float)
    out = np.empty_like(flat)
    small = flat <= SERIES_SWITCH
    tiny = flat < LOG_ASYMPTOTIC_T
    if np.any(small & ~tiny):
        ts = flat[small & ~tiny]
        out[small & ~tiny] = np.exp(ts) * _e1_series(ts)
    if np.any(tiny):
        ts = flat[tiny]
        out[tiny] = (1.0 + ts) * (-EULER_GAMMA - np.log(ts) + ts)
    if np.any(~small):
        out[~small] = _scaled_e1_cf(flat[~small])
    return _shaped(out.reshape(arr.shape), arr)


def exp_integral_e1(x):
    """
    Интегральная показательная функция E1(x) = ∫ₓ^∞ e^(−t)/t dt

    Args:
        x: Аргумент x > 0 (скаляр или массив)

    Returns:
        E1(x)

    Raises:
        DomainError: если x ≤ 0
    """
    arr = _positive_array(x)
    flat = np.atleast_1d(arr).astype(float)
    out = np.empty_like(flat)
    small = flat <= SERIES_SWITCH
    if np.any(small):
        out[small] = _e1_series(flat[small])
    if np.any(~small):
        big = flat[~small]
        out[~small] = np.exp(-big) * _scaled_e1_cf(big)
    return _shaped(out.reshape(arr.shape), arr)


def h(x):
    """
    Ядро эргодической скорости h(x) = exp(1/x)·E1(1/x)

    Args:
        x: Аргумент x > 0

    Returns:
        h(x) ∈ (0, log(1+x)]
    """
    arr = _positive_array(x)
    return _shaped(np.asarray(scaled_exp_integral_e1(1.0 / arr)), arr)


def h_prime(x):
    """
    Производная h'(x) = 1/x − h(x)/x²

    Args:
        x: Аргумент x > 0

    Returns:
        h'(x) > 0
    """
    arr = _positive_array(x)
    flat = np.atleast_1d(arr).astype(float)
    t = 1.0 / flat
    out = np.empty_like(flat)
    asym = t > DERIV_ASYMPTOTIC_T
    if np.any(~asym):
        tn = t[~asym]
        out[~asym] = tn - tn * tn * np.asarray(scaled_exp_integral_e1(tn))
    if np.any(asym):
        # h' = Σ_{k≥1} (−1)^(k+1) k!/t^(k−1)
        ta = t[asym]
        acc = np.zeros_like(ta)
        term = np.ones_like(ta)
        for k in range(1, 9):
            acc = acc + term
            term = -term * (k + 1) / ta
        out[asym] = acc
    return _shaped(out.reshape(arr.shape), arr)


def _unit_interval(z, closed, name="z"):
    arr = np.asarray(z, dtype=float)
    upper_ok = arr <= 1.0 if closed else arr < 1.0
    if not np.all((arr > 0.0) & upper_ok):
        bound = "(0, 1]" if closed else "(0, 1)"
        raise DomainError(f"{name} должен лежать в {bound}")
    return arr


def _fg_parts(z):
    """Возвращает (ε, s, маска ряда) для z ∈ (0, 1]"""
    eps = (1.0 - z) * (1.0 + z)
    s = np.sqrt(eps)
    return eps, s, eps < FG_SERIES_EPS


def f(z):
    """
    f(z) = log((1+s)/(1−s))/s, s = √(1−z²), z ∈ (0, 1)

    Вблизи z = 1 используется ряд 2(1 + ε/3 + ε²/5), ε = 1 − z².
    """
    arr = _unit_interval(z, closed=False)
    flat = np.atleast_1d(arr)
    eps, s, series = _fg_parts(flat)
    out = np.empty_like(flat)
    out[series] = 2.0 * (1.0 + eps[series] / 3.0 + eps[series] ** 2 / 5.0)
    direct = ~series
    # 1 − s = z²/(1 + s), поэтому (1+s)/(1−s) = ((1+s)/z)²
    out[direct] = 2.0 * np.log((1.0 + s[direct]) / flat[direct]) / s[direct]
    return _shaped(out.reshape(arr.shape), arr)


def g(z):
    """
    g(z) = f(z) + 2·log z, z ∈ (0, 1]; g(1) = 2 по непрерывности
    """
    arr = _unit_interval(z, closed=True)
    flat = np.atleast_1d(arr)
    eps, s, series = _fg_parts(flat)
    out = np.empty_like(flat)
    zs = flat[series]
    out[series] = 2.0 * (1.0 + eps[series] / 3.0 + eps[series] ** 2 / 5.0) + 2.0 * np.log(zs)
    direct = ~series
    zd, sd = flat[direct], s[direct]
    out[direct] = (2.0 * np.log1p(sd) - 2.0 * zd * zd * np.log(zd) / (1.0 + sd)) / sd
    return _shaped(out.reshape(arr.shape), arr)


def kappa_log_ratio(kappa):
    """
    κ·log κ/(κ−1) с устранимой особенностью в κ = 1 (значение 1)
    """
    arr = _positive_array(kappa, "kappa")
    flat = np.atleast_1d(arr)
    t = flat - 1.0
    out = np.empty_like(flat)
    near = np.abs(t) < KAPPA_SERIES_EPS
    out[near] = 1.0 + t[near] / 2.0 - t[near] ** 2 / 6.0
    far = ~near
    out[far] = flat[far] * np.log1p(t[far]) / t[far]
    return _shaped(out.reshape(arr.shape), arr)


def log_ratio(kappa):
    """
    log κ/(κ−1) с устранимой особенностью в κ = 1 (значение 1)
    """
    arr = _positive_array(kappa, "kappa")
    flat = np.atleast_1d(arr)
    t = flat - 1.0
    out = np.empty_like(flat)
    near = np.abs(t) < KAPPA_SERIES_EPS
    out[near] = 1.0 - t[near] / 2.0 + t[near] ** 2 / 3.0
    far = ~near
    out[far] = np.log1p(t[far]) / t[far]
    return _shaped(out.reshape(arr.shape), arr)
