"""
Построение статистически оптимальных лучей: замкнутые оптимумы низкого и высокого SNR,
оптимум одного пользователя, семейства-кандидаты с поиском параметров,
случайный поиск по G(2,1)×G(2,1) и угловая диагностика.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from services.montecarlo import map_chunks
from services.rates import (
    high_snr_summary,
    pair_rates_batch,
    sum_rate,
    sum_rate_high_snr_limit,
)
from utils.errors import DomainError
from utils.linalg import (
    Covariance,
    GrassmannVector,
    canonical_phase,
    eigh,
    generalized_eig,
)
from utils.specfun import kappa_log_ratio, log_ratio

logger = logging.getLogger(__name__)

# Сетка α, β: {0} ∪ 49 точек логарифмической шкалы на [1e-4, 1e4]
ALPHA_BETA_GRID = np.concatenate(([0.0], np.logspace(-4.0, 4.0, 49)))
# Сетка взвешенного семейства: 9 значений на параметр
WEIGHTED_GRID = np.concatenate(([0.0], np.logspace(-2.0, 4.0, 8)))
# Относительная точность золотого сечения (в логарифме параметра)
GOLDEN_TOL = 1e-4
MAX_CYCLES = 8
# Фиксированная пара для высокого SNR
FIXED_ALPHA = 100.0
FIXED_BETA = 15.0
# Локальная доводка случайного поиска
POLISH_STEPS = 200
POLISH_SCALE = 0.05
SEARCH_CHUNK = 1000
COMMON_BASIS_TOL = 1e-9

_GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0


@dataclass
class BeamformerPair:
    """
    Пара лучей (w₁, w₂)

    value: сопутствующая характеристика: наклон при низком SNR или предел при высоком
    """

    w1: GrassmannVector
    w2: GrassmannVector
    degenerate: bool = False
    value: Optional[float] = None


@dataclass
class SearchResult:
    pair: BeamformerPair
    params: List[float]
    achieved: float
    evaluations: int


@dataclass(frozen=True)
class WeightedObjective:
    """Веса ζ₁, ζ₂ ∈ [0, 1] взвешенной суммы ζ₁E[R₁] + ζ₂E[R₂]"""

    zeta1: float = 1.0
    zeta2: float = 1.0

    def __post_init__(self):
        for name in ("zeta1", "zeta2"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} должен лежать в [0, 1], получено {value}")

    def combine(self, r1, r2):
        return self.zeta1 * r1 + self.zeta2 * r2


_UNWEIGHTED = WeightedObjective(1.0, 1.0)


def _shifted(S, scale):
    """scale·Σ + I"""
    return Covariance(scale * S.matrix + np.eye(S.dim))


def _dominant(A, B):
    pair = generalized_eig(A, B)
    return pair.vectors[0], pair.degenerate


def optimal_low_snr(Sigma1, Sigma2):
    """
    Оптимум при низком SNR: w_i = u₁(Σ_i)

    Returns:
        BeamformerPair: value = (λ₁(Σ₁) + λ₁(Σ₂))/2, наклон суммарной скорости
    """
    dec1, dec2 = eigh(Sigma1), eigh(Sigma2)
    return BeamformerPair(
        w1=dec1.vectors[0],
        w2=dec2.vectors[0],
        degenerate=dec1.degenerate or dec2.degenerate,
        value=float(dec1.values[0] + dec2.values[0]) / 2.0,
    )


def optimal_high_snr(Sigma1, Sigma2):
    """
    Оптимум при высоком SNR: w₁ = u₁(Σ₂⁻¹Σ₁), w₂ = u₁(Σ₁⁻¹Σ₂)

    Args:
        Sigma1, Sigma2 (Covariance): Положительно определённые ковариации

    Returns:
        tuple: (BeamformerPair с пределом суммарной скорости, HighSnrSummary)
    """
    gen = generalized_eig(Sigma1, Sigma2)
    summary = high_snr_summary(Sigma1, Sigma2)
    pair = BeamformerPair(
        w1=gen.vectors[0],
        w2=gen.vectors[1],
        degenerate=gen.degenerate,
        value=sum_rate_high_snr_limit(summary),
    )
    return pair, summary


def optimal_single_user(Sigma_i, regime="high", user=1):
    """
    Пара, максимизирующая E[R_i] одного пользователя: w_i = u₁(Σ_i), w_j = u₂(Σ_i)

    Args:
        Sigma_i (Covariance): Ковариация пользователя
        regime (str): "low" или "high"
        user (int): 1 или 2, чей луч w_i

    Returns:
        BeamformerPair: value: наклон λ₁/2 (low) или предел χ·log χ/(χ−1) (high)
    """
    if regime not in ("low", "high"):
        raise DomainError(f"неизвестный режим {regime!r}")
    if user not in (1, 2):
        raise DomainError(f"пользователь должен быть 1 или 2, получено {user}")
    dec = eigh(Sigma_i)
    own, other = dec.vectors[0], dec.vectors[1]
    if regime == "low":
        value = float(dec.values[0]) / 2.0
    else:
        if dec.values[-1] <= 0:
            raise DomainError("для режима high ковариация должна быть положительно определённой")
        value = float(kappa_log_ratio(dec.values[0] / dec.values[-1]))
    if user == 1:
        return BeamformerPair(w1=own, w2=other, degenerate=dec.degenerate, value=value)
    return BeamformerPair(w1=other, w2=own, degenerate=dec.degenerate, value=value)


def optimal_common_eigenbasis(Sigma1, Sigma2):
    """
    Оптимум высокого SNR для ковариаций с общим собственным базисом

    χ₁ = λ₁/λ₂ у Σ₁, χ₂ = μ₁/μ₂, μ_k = u_k^H Σ₂ u_k. При χ₁ ≥ χ₂ пара (u₁, u₂)
    и предел χ₁log χ₁/(χ₁−1) + log χ₂/(χ₂−1), иначе (u₂, u₁) и
    log χ₁/(χ₁−1) + χ₂log χ₂/(χ₂−1).

    Raises:
        DomainError: если собственные базисы не совпадают
    """
    dec = eigh(Sigma1)
    if dec.degenerate:
        dec = eigh(Sigma2)
    u1, u2 = dec.vectors[0], dec.vectors[1]
    scale = float(np.max(np.abs(Sigma2.matrix)))
    if abs(np.conj(u1.coords) @ Sigma2.matrix @ u2.coords) > COMMON_BASIS_TOL * scale:
        raise DomainError("ковариации не имеют общего собственного базиса")
    lam1 = float(np.real(np.conj(u1.coords) @ Sigma1.matrix @ u1.coords))
    lam2 = float(np.real(np.conj(u2.coords) @ Sigma1.matrix @ u2.coords))
    mu1 = float(np.real(np.conj(u1.coords) @ Sigma2.matrix @ u1.coords))
    mu2 = float(np.real(np.conj(u2.coords) @ Sigma2.matrix @ u2.coords))
    chi1, chi2 = lam1 / lam2, mu1 / mu2
    if chi1 >= chi2:
        value = float(kappa_log_ratio(chi1) + log_ratio(chi2))
        return BeamformerPair(w1=u1, w2=u2, value=value)
    value = float(log_ratio(chi1) + kappa_log_ratio(chi2))
    return BeamformerPair(w1=u2, w2=u1, value=value)


def candidate_pair(alpha, beta, Sigma1, Sigma2):
    """
    Семейство-кандидат: w₁ = dom.eig((αΣ₂+I)⁻¹Σ₁), w₂ = dom.eig((βΣ₁+I)⁻¹Σ₂)

    Args:
        alpha, beta (float): Неотрицательные параметры
        Sigma1, Sigma2 (Covariance): Ковариации пользователей

    Returns:
        BeamformerPair
    """
    if not (alpha >= 0 and beta >= 0 and math.isfinite(alpha) and math.isfinite(beta)):
        raise DomainError(f"α, β должны быть конечными и неотрицательными: {alpha}, {beta}")
    w1, deg1 = _dominant(Sigma1, _shifted(Sigma2, alpha))
    w2, deg2 = _dominant(Sigma2, _shifted(Sigma1, beta))
    return BeamformerPair(w1=w1, w2=w2, degenerate=deg1 or deg2)


def fixed_high_snr_pair(Sigma1, Sigma2):
    """Пара с фиксированными α = 100, β = 15"""
    return candidate_pair(FIXED_ALPHA, FIXED_BETA, Sigma1, Sigma2)


def weighted_candidate_pair(alpha, beta, gamma, delta, Sigma1, Sigma2):
    """
    Взвешенное семейство: w₁ = dom.eig((αΣ₂+I)⁻¹(γΣ₁+I)), w₂ = dom.eig((βΣ₁+I)⁻¹(δΣ₂+I))

    Returns:
        BeamformerPair
    """
    params = (alpha, beta, gamma, delta)
    if not all(p >= 0 and math.isfinite(p) for p in params):
        raise DomainError(f"параметры должны быть конечными и неотрицательными: {params}")
    w1, deg1 = _dominant(_shifted(Sigma1, gamma), _shifted(Sigma2, alpha))
    w2, deg2 = _dominant(_shifted(Sigma2, delta), _shifted(Sigma1, beta))
    return BeamformerPair(w1=w1, w2=w2, degenerate=deg1 or deg2)


def _golden_max(fn, a, b, tol=GOLDEN_TOL):
    """Золотое сечение для максимума fn на [a, b]; возвращает (точка, значение, число вызовов)"""
    c = b - (b - a) / _GOLDEN_RATIO
    d = a + (b - a) / _GOLDEN_RATIO
    calls = 0
    while abs(c - d) > tol:
        if fn(c) > fn(d):
            b = d
        else:
            a = c
        calls += 2
        c = b - (b - a) / _GOLDEN_RATIO
        d = a + (b - a) / _GOLDEN_RATIO
    x = (a + b) / 2.0
    return x, fn(x), calls + 1


class _CoordinateSearch:
    """
    Циклический покоординатный поиск золотым сечением по ln(параметра)

    Отрезок для каждой координаты: соседние узлы сетки вокруг текущего значения;
    новое значение принимается только при улучшении.
    """

    def __init__(self, objective, grids):
        self.objective = objective
        self.grids = grids
        self.evaluations = 0

    def _bracket(self, grid, value):
        positive = grid[grid > 0]
        logs = np.log(positive)
        if value <= 0:
            return logs[0] - 2.0 * (logs[1] - logs[0]), logs[0] + (logs[1] - logs[0])
        step = logs[1] - logs[0]
        current = math.log(value)
        return max(current - step, logs[0] - step), min(current + step, logs[-1])

    def run(self, start, best):
        params = list(start)
        for cycle in range(MAX_CYCLES):
            moved = False
            for k, grid in enumerate(self.grids):
                lo, hi = self._bracket(grid, params[k])

                def along(s, k=k):
                    trial = list(params)
                    trial[k] = math.exp(s)
                    return self.objective(trial)

                s_best, value, calls = _golden_max(along, lo, hi)
                self.evaluations += calls
                if value > best:
                    new = math.exp(s_best)
                    if params[k] <= 0 or abs(new - params[k]) > GOLDEN_TOL * params[k]:
                        moved = True
                    params[k] = new
                    best = value
            logger.debug("цикл %d: параметры %s, значение %.9f", cycle + 1, params, best)
            if not moved:
                break
        return params, best


def _alpha_beta_objective(Sigma1, Sigma2, rho, obj):
    def evaluate(params):
        pair = candidate_pair(params[0], params[1], Sigma1, Sigma2)
        report = sum_rate(Sigma1, Sigma2, pair, rho, obj)
        return report.weighted

    return evaluate


def optimize_alpha_beta(Sigma1, Sigma2, rho):
    """
    Максимум суммарной скорости по (α, β): сетка 50×50, затем золотое сечение

    Returns:
        SearchResult: params = [α*, β*]
    """
    grid = ALPHA_BETA_GRID
    W1 = np.array([candidate_pair(a, 0.0, Sigma1, Sigma2).w1.coords for a in grid])
    W2 = np.array([candidate_pair(0.0, b, Sigma1, Sigma2).w2.coords for b in grid])
    r1, r2 = pair_rates_batch(Sigma1, Sigma2, W1[:, None, :], W2[None, :, :], rho)
    table = r1 + r2
    i, j = np.unravel_index(int(np.argmax(table)), table.shape)
    logger.debug("сетка α, β: максимум %.9f при α=%g, β=%g", table[i, j], grid[i], grid[j])

    objective = _alpha_beta_objective(Sigma1, Sigma2, rho, _UNWEIGHTED)
    search = _CoordinateSearch(objective, [grid, grid])
    params, _ = search.run([grid[i], grid[j]], float(table[i, j]))
    pair = candidate_pair(params[0], params[1], Sigma1, Sigma2)
    achieved = sum_rate(Sigma1, Sigma2, pair, rho).sum
    return SearchResult(pair=pair, params=[float(p) for p in params], achieved=achieved,
                        evaluations=table.size + search.evaluations)


def optimize_weighted(Sigma1, Sigma2, rho, obj):
    """
    Максимум ζ₁E[R₁] + ζ₂E[R₂] по (α, β, γ, δ): сетка 9⁴, затем покоординатное золотое сечение

    Returns:
        SearchResult: params = [α*, β*, γ*, δ*]
    """
    grid = WEIGHTED_GRID
    combos = [(x, y) for x in grid for y in grid]
    # w₁ зависит от (α, γ), w₂ от (β, δ)
    W1 = np.array([weighted_candidate_pair(a, 0.0, c, 0.0, Sigma1, Sigma2).w1.coords for a, c in combos])
    W2 = np.array([weighted_candidate_pair(0.0, b, 0.0, d, Sigma1, Sigma2).w2.coords for b, d in combos])
    r1, r2 = pair_rates_batch(Sigma1, Sigma2, W1[:, None, :], W2[None, :, :], rho)
    table = obj.combine(r1, r2)
    i, j = np.unravel_index(int(np.argmax(table)), table.shape)
    (alpha, gamma), (beta, delta) = combos[i], combos[j]

    def objective(params):
        pair = weighted_candidate_pair(*params, Sigma1, Sigma2)
        return sum_rate(Sigma1, Sigma2, pair, rho, obj).weighted

    search = _CoordinateSearch(objective, [grid] * 4)
    params, _ = search.run([alpha, beta, gamma, delta], float(table[i, j]))
    pair = weighted_candidate_pair(*params, Sigma1, Sigma2)
    achieved = sum_rate(Sigma1, Sigma2, pair, rho, obj).weighted
    return SearchResult(pair=pair, params=[float(p) for p in params], achieved=achieved,
                        evaluations=table.size + search.evaluations)


def _tangent_step(rng, w, scale):
    noise = rng.standard_normal(w.shape) + 1j * rng.standard_normal(w.shape)
    noise = noise - np.vdot(w, noise) * w
    return canonical_phase(w + scale * noise)


def grassmann_search(Sigma1, Sigma2, rho, n_samples, seed, obj=None, workers=1):
    """
    Случайный поиск по G(2,1)×G(2,1) с локальной доводкой

    Изотропные пары оцениваются кусками по SEARCH_CHUNK с независимыми потоками;
    лучшая пара (при равенстве с меньшим индексом) доводится случайными шагами
    в касательном пространстве, шаг делится пополам при неудаче.

    Returns:
        SearchResult: params пустой
    """
    if n_samples < 1:
        raise DomainError("n_samples должно быть ≥ 1")
    obj = obj or _UNWEIGHTED
    sizes = [SEARCH_CHUNK] * (n_samples // SEARCH_CHUNK)
    if n_samples % SEARCH_CHUNK:
        sizes.append(n_samples % SEARCH_CHUNK)
    children = np.random.SeedSequence(seed).spawn(len(sizes) + 1)

    def run(args):
        child, size = args
        rng = np.random.Generator(np.random.Philox(child))
        raw = rng.standard_normal((2, size, 2)) + 1j * rng.standard_normal((2, size, 2))
        W1, W2 = canonical_phase(raw[0]), canonical_phase(raw[1])
        r1, r2 = pair_rates_batch(Sigma1, Sigma2, W1, W2, rho)
        values = obj.combine(r1, r2)
        k = int(np.argmax(values))
        return float(values[k]), W1[k], W2[k]

    results = map_chunks(run, list(zip(children[:-1], sizes)), workers)
    best_value, w1, w2 = results[0]
    for value, c1, c2 in results[1:]:
        if value > best_value:
            best_value, w1, w2 = value, c1, c2

    rng = np.random.Generator(np.random.Philox(children[-1]))
    scale = POLISH_SCALE
    for _ in range(POLISH_STEPS):
        t1, t2 = _tangent_step(rng, w1, scale), _tangent_step(rng, w2, scale)
        r1, r2 = pair_rates_batch(Sigma1, Sigma2, t1, t2, rho)
        value = float(obj.combine(r1, r2))
        if value > best_value:
            best_value, w1, w2 = value, t1, t2
        else:
            scale /= 2.0

    pair = BeamformerPair(w1=GrassmannVector(w1), w2=GrassmannVector(w2))
    report = sum_rate(Sigma1, Sigma2, pair, rho, obj)
    return SearchResult(pair=pair, params=[], achieved=float(report.weighted),
                        evaluations=n_samples + POLISH_STEPS)


def angle_profile(Sigma1, Sigma2, params, which=1):
    """
    Косинус угла между лучом семейства-кандидата и оптимумом низкого SNR

    Args:
        params (list): Значения α (which=1) или β (which=2)
        which (int): 1: |w₁(α)^H u₁(Σ₁)|, 2: |w₂(β)^H u₁(Σ₂)|

    Returns:
        list: Пары (параметр, cos)
    """
    if which not in (1, 2):
        raise DomainError(f"which должен быть 1 или 2, получено {which}")
    reference = eigh(Sigma1 if which == 1 else Sigma2).vectors[0]
    profile = []
    for p in params:
        pair = candidate_pair(p, 0.0, Sigma1, Sigma2) if which == 1 else candidate_pair(0.0, p, Sigma1, Sigma2)
        beam = pair.w1 if which == 1 else pair.w2
        profile.append((float(p), min(1.0, beam.overlap(reference))))
    return profile


def sinr_ratio(Sigma_num, Sigma_den, w, alpha=None):
    """
    Средний SINR: w^HΣ_num w / w^HΣ_den w, либо w^HΣ₁w / (w^Hw + α·w^HΣ₂w) при заданном α
    """
    coords = w.coords if isinstance(w, GrassmannVector) else np.asarray(w, complex)
    num = float(np.real(np.conj(coords) @ Sigma_num.matrix @ coords))
    den = float(np.real(np.conj(coords) @ Sigma_den.matrix @ coords))
    if alpha is None:
        return num / den
    return num / (float(np.real(np.vdot(coords, coords))) + alpha * den)
