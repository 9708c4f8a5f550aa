"""
Замкнутые выражения эргодических скоростей при линейном формировании луча:
двухпользовательский случай, пределы низкого и высокого SNR, случай
ковариации ранга 1, формулы для трёх и M пользователей.

Скорости везде в натах (натуральный логарифм).
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from services.density import WeightSpectrum, perturb_ties
from utils.errors import BoundaryError, DimensionError, DomainError, RankError
from utils.linalg import (
    abc_values,
    condition_number,
    eigh,
    generalized_eig,
    sqrtm_psd,
    tau_coefficients,
)
from utils.specfun import PositiveReal, g, h, h_prime, kappa_log_ratio, log_ratio

logger = logging.getLogger(__name__)

# Относительная щель Λ₁ − Λ₂, ниже которой используется слитный предел
CONFLUENT_GAP = 1e-8
# Порог второго собственного значения для ковариации ранга 1
RANK_ONE_TOL = 1e-9


@dataclass(frozen=True)
class AbcTriple:
    """A = w_i^H Σ_i w_i, B = w_j^H Σ_i w_j, C = |w_i^H Σ_i w_j|"""

    A: float
    B: float
    C: float

    def __post_init__(self):
        # неравенство Коши-Буняковского C² ≤ AB с допуском на округление
        bound = np.sqrt(max(self.A, 0.0) * max(self.B, 0.0))
        if self.C > bound * (1.0 + 1e-9) + 1e-15:
            raise DomainError(f"нарушено C² ≤ AB: A={self.A}, B={self.B}, C={self.C}")
        object.__setattr__(self, "C", float(min(self.C, bound)))

    @property
    def gram_det(self):
        """AB − C² ≥ 0"""
        return max(0.0, self.A * self.B - self.C * self.C)


@dataclass(frozen=True)
class EigenSplit:
    lambda1: float
    lambda2: float
    lambda_tilde1: float
    degenerate: bool = False


@dataclass
class RateReport:
    """Скорости пользователей, их сумма и (при наличии весов) взвешенная сумма"""

    per_user: List[float]
    snr: float
    sum: float = 0.0
    weighted: Optional[float] = None

    def __post_init__(self):
        self.per_user = [float(r) for r in self.per_user]
        self.sum = float(np.sum(self.per_user))


@dataclass
class HighSnrSummary:
    eta1: float
    eta2: float
    tau1: float
    tau2: float
    tau3_abs: float
    kappa1: float
    kappa2: float
    chi1: float
    chi2: float
    degenerate: bool = field(default=False)


def _rho(rho):
    return float(PositiveReal(float(rho)))


def abc_coefficients(Sigma_i, w_i, w_j):
    """
    Коэффициенты (A, B, C) для пользователя i

    Args:
        Sigma_i (Covariance): Ковариация канала пользователя i (M = 2)
        w_i, w_j (GrassmannVector): Свой и мешающий векторы

    Returns:
        AbcTriple
    """
    if not (Sigma_i.dim == w_i.dim == w_j.dim):
        raise DimensionError(f"несовпадающие размерности: Σ {Sigma_i.dim}, w_i {w_i.dim}, w_j {w_j.dim}")
    if Sigma_i.dim != 2:
        raise DimensionError("двухпользовательская формула определена только для M = 2")
    a, b, c = abc_values(Sigma_i, w_i.coords, w_j.coords)
    return AbcTriple(float(a), float(b), float(c))


def _split_arrays(a, b, c):
    """Λ₁, Λ₂ как корни λ² − (A+B)λ + (AB − C²)"""
    a, b, c = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float), np.asarray(c, float))
    det = np.clip(a * b - c * c, 0.0, None)
    lam1 = (a + b + np.sqrt((a - b) ** 2 + 4.0 * c * c)) / 2.0
    safe = np.where(lam1 > 0, lam1, 1.0)
    lam2 = np.where(lam1 > 0, det / safe, 0.0)
    degenerate = (lam1 - lam2) < CONFLUENT_GAP * np.maximum(lam1, 1e-300)
    return lam1, lam2, degenerate


def eigen_split(t):
    """
    Собственные значения Λ₁ ≥ Λ₂ и Λ̃₁ = B для тройки (A, B, C)

    Args:
        t (AbcTriple): Коэффициенты пользователя

    Returns:
        EigenSplit
    """
    lam1, lam2, degenerate = _split_arrays(t.A, t.B, t.C)
    return EigenSplit(float(lam1), float(lam2), float(t.B), bool(degenerate))


def _lam_h(lam, x):
    """Λ·h(x) с нулём при Λ = 0"""
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = lam[pos] * np.asarray(h(x[pos]))
    return out


def two_user_rate_abc(a, b, c, rho):
    """
    Векторизованная двухпользовательская скорость по массивам A, B, C

    Args:
        a, b, c: Массивы коэффициентов одинаковой (или совместимой) формы
        rho (float): SNR ρ > 0

    Returns:
        np.ndarray: E[R_i] для каждой тройки
    """
    rho = _rho(rho)
    lam1, lam2, degenerate = _split_arrays(a, b, c)
    shape = lam1.shape
    lam1, lam2, degenerate = lam1.ravel(), lam2.ravel(), degenerate.ravel()
    bb = np.broadcast_to(np.asarray(b, float), shape).ravel()
    x1 = rho * lam1 / 2.0
    x2 = rho * lam2 / 2.0
    xb = rho * bb / 2.0

    signal = np.zeros_like(lam1)
    regular = ~degenerate
    if np.any(regular):
        num = _lam_h(lam1[regular], x1[regular]) - _lam_h(lam2[regular], x2[regular])
        signal[regular] = num / (lam1[regular] - lam2[regular])
    confluent = degenerate & (x1 > 0)
    if np.any(confluent):
        xc = x1[confluent]
        signal[confluent] = np.asarray(h(xc)) + xc * np.asarray(h_prime(xc))

    interference = np.zeros_like(bb)
    pos = xb > 0
    if np.any(pos):
        interference[pos] = np.asarray(h(xb[pos]))
    return np.clip(signal - interference, 0.0, None).reshape(shape)


def ergodic_rate_two_user(Sigma_i, w_i, w_j, rho):
    """
    Эргодическая скорость пользователя i при двух пользователях

    [Λ₁h(ρΛ₁/2) − Λ₂h(ρΛ₂/2)]/(Λ₁ − Λ₂) − h(ρΛ̃₁/2); при Λ₁ = Λ₂ первое
    слагаемое заменяется пределом h(x) + x·h'(x).

    Args:
        Sigma_i (Covariance): Ковариация пользователя i
        w_i, w_j (GrassmannVector): Свой и мешающий векторы
        rho (float): SNR ρ

    Returns:
        float: E[R_i], наты
    """
    t = abc_coefficients(Sigma_i, w_i, w_j)
    return float(two_user_rate_abc(t.A, t.B, t.C, rho))


def rate_low_snr_slope(Sigma_i, w_i):
    """Предел E[R_i]/ρ при ρ → 0: A_i/2"""
    if Sigma_i.dim != 2:
        raise DimensionError("наклон низкого SNR определён для M = 2")
    a, _, _ = abc_values(Sigma_i, w_i.coords, w_i.coords)
    return float(a) / 2.0


def rate_high_snr_limit(t, method="direct"):
    """
    Предел E[R_i] при ρ → ∞

    Args:
        t (AbcTriple): Коэффициенты пользователя
        method (str): "direct": artanh(u)/u + ½log((AB − C²)/B²), u = √((A−B)² + 4C²)/(A+B);
            "fg": ½g(d_Σ) + log(1 + A/B) − log 2

    Returns:
        float: Предельная скорость, наты

    Raises:
        BoundaryError: если B = 0 или AB = C² (d_Σ = 0)
    """
    det = t.gram_det
    if t.B <= 0 or det <= 0:
        raise BoundaryError(f"предел высокого SNR не определён: B={t.B}, AB−C²={det} (d_Σ = 0)")
    total = t.A + t.B
    if method == "direct":
        u = np.sqrt((t.A - t.B) ** 2 + 4.0 * t.C * t.C) / total
        if u < 1e-6:
            atanh_ratio = 1.0 + u * u / 3.0 + u ** 4 / 5.0
        else:
            atanh_ratio = np.arctanh(u) / u
        return float(atanh_ratio + 0.5 * np.log(det / (t.B * t.B)))
    if method == "fg":
        d = min(1.0, 2.0 * np.sqrt(det) / total)
        return float(0.5 * g(d) + np.log1p(t.A / t.B) - np.log(2.0))
    raise DomainError(f"неизвестный метод {method!r}")


def rate_rank_deficient(Sigma_i, w_i, w_j, rho):
    """
    Скорость пользователя с ковариацией ранга 1, Σ_i = λ₁u₁u₁^H

    h((ρ/2)λ₁(|u₁^H w_i|² + |u₁^H w_j|²)) − h((ρ/2)λ₁|u₁^H w_j|²), h(0) = 0

    Raises:
        RankError: если λ₂ > 1e-9·λ₁
    """
    rho = _rho(rho)
    dec = eigh(Sigma_i)
    lam1 = dec.values[0]
    if np.any(dec.values[1:] > RANK_ONE_TOL * lam1):
        raise RankError(f"ожидалась ковариация ранга 1, спектр {dec.values}")
    u1 = dec.vectors[0]
    own = u1.overlap(w_i) ** 2
    other = u1.overlap(w_j) ** 2

    def _h0(x):
        return float(h(x)) if x > 0 else 0.0

    return max(0.0, _h0(rho * lam1 * (own + other) / 2.0) - _h0(rho * lam1 * other / 2.0))


def _expected_log_term(values, rho, m):
    """
    E[I] = Σ_k Π_{j≠k} Λ_k/(Λ_k − Λ_j) · h(ρΛ_k/M); нулевые Λ_k выпадают
    """
    lam = np.asarray(values, dtype=float)
    pos = np.sort(lam[lam > 0])[::-1]
    if pos.size == 0:
        return 0.0
    if pos.size == 1:
        return float(h(rho * pos[0] / m))
    spec = WeightSpectrum(pos)
    if spec.has_ties():
        spec = perturb_ties(spec)
    pos = spec.lambdas
    total = 0.0
    for k in range(pos.size):
        others = np.delete(pos, k)
        weight = np.prod(pos[k] / (pos[k] - others))
        total += weight * float(h(rho * pos[k] / m))
    return total


def ergodic_rate_general_m(signal_spec, intf_spec, rho, M):
    """
    Скорость при M пользователях через обобщённые хи-квадрат величины: E[I₁] − E[I₂]

    Args:
        signal_spec (WeightSpectrum): Спектр Σ^{1/2}(Σ_j w_j w_j^H)Σ^{1/2}
        intf_spec (WeightSpectrum): Спектр без собственного луча
        rho (float): SNR ρ (делится поровну: ρ/M)
        M (int): Число пользователей (антенн)

    Returns:
        float: E[R_i], наты
    """
    rho = _rho(rho)
    rate = _expected_log_term(signal_spec.lambdas, rho, M) - _expected_log_term(intf_spec.lambdas, rho, M)
    return max(0.0, rate)


def _spectra_values(Sigma_i, ws, user):
    if any(w.dim != Sigma_i.dim for w in ws):
        raise DimensionError("размерности лучей и ковариации не совпадают")
    root = sqrtm_psd(Sigma_i).matrix
    W = np.column_stack([w.coords for w in ws])
    others = np.delete(W, user, axis=1)
    full = root @ (W @ W.conj().T) @ root
    intf = root @ (others @ others.conj().T) @ root
    return eigh((full + full.conj().T) / 2.0).values, eigh((intf + intf.conj().T) / 2.0).values


def user_spectra(Sigma_i, ws, user):
    """
    Спектры сигнала с помехой и одной помехи для пользователя user

    Args:
        Sigma_i (Covariance): Ковариация пользователя
        ws (list): Лучи всех пользователей (GrassmannVector)
        user (int): Индекс пользователя (с нуля)

    Returns:
        tuple: (WeightSpectrum сигнала, WeightSpectrum помехи)
    """
    signal, intf = _spectra_values(Sigma_i, ws, user)
    return WeightSpectrum(signal), WeightSpectrum(intf)


def ergodic_rate_m_user(Sigma_i, ws, user, rho):
    """Скорость пользователя user при M = len(ws) лучах по общей формуле"""
    rho = _rho(rho)
    signal, intf = _spectra_values(Sigma_i, ws, user)
    m = len(ws)
    return max(0.0, _expected_log_term(signal, rho, m) - _expected_log_term(intf, rho, m))


def ergodic_rate_three_user(Sigma_i, w1, w2, w3, rho, user=0):
    """
    Скорость пользователя при трёх пользователях (шесть слагаемых с h, мощность ρ/3)

    Args:
        Sigma_i (Covariance): Ковариация 3×3
        w1, w2, w3 (GrassmannVector): Лучи пользователей
        rho (float): SNR ρ
        user (int): Чей луч полезный (0, 1 или 2)

    Returns:
        float: E[R_i], наты
    """
    if Sigma_i.dim != 3:
        raise DimensionError("формула трёх пользователей требует M = 3")
    rho = _rho(rho)
    signal, intf = _spectra_values(Sigma_i, [w1, w2, w3], user)
    lam = perturb_ties(WeightSpectrum(signal)).lambdas if WeightSpectrum(signal).has_ties() else signal
    l1, l2, l3 = lam
    # помеха имеет ранг ≤ 2: Λ̃₃ = 0
    lt1, lt2 = intf[0], intf[1]
    if lt1 > 0 and lt2 > 0 and lt1 - lt2 <= 1e-9 * lt1:
        lt1, lt2 = perturb_ties(WeightSpectrum([lt1, lt2])).lambdas

    def _hx(x):
        return float(h(x)) if x > 0 else 0.0

    first = 0.0
    for lk, la, lb in ((l1, l2, l3), (l2, l1, l3), (l3, l1, l2)):
        if lk > 0:
            first += lk * lk / ((lk - la) * (lk - lb)) * _hx(rho * lk / 3.0)
    if lt2 > 0:
        second = (lt1 * _hx(rho * lt1 / 3.0) - lt2 * _hx(rho * lt2 / 3.0)) / (lt1 - lt2)
    else:
        second = _hx(rho * lt1 / 3.0)
    return max(0.0, first - second)


def sum_rate(Sigma1, Sigma2, pair, rho, objective=None):
    """
    Эргодические скорости обоих пользователей для пары лучей

    Args:
        Sigma1, Sigma2 (Covariance): Ковариации пользователей
        pair (BeamformerPair): Пара (w₁, w₂)
        rho (float): SNR ρ
        objective (WeightedObjective, optional): Веса ζ₁, ζ₂

    Returns:
        RateReport
    """
    r1 = ergodic_rate_two_user(Sigma1, pair.w1, pair.w2, rho)
    r2 = ergodic_rate_two_user(Sigma2, pair.w2, pair.w1, rho)
    report = RateReport(per_user=[r1, r2], snr=float(rho))
    if objective is not None:
        report.weighted = objective.zeta1 * r1 + objective.zeta2 * r2
    return report


def weighted_sum_rate(Sigma1, Sigma2, pair, rho, objective):
    return sum_rate(Sigma1, Sigma2, pair, rho, objective)


def pair_rates_batch(Sigma1, Sigma2, W1, W2, rho):
    """
    Скорости (E[R₁], E[R₂]) для массивов лучей с совместимыми формами (..., 2)

    Args:
        W1, W2 (np.ndarray): Лучи первого и второго пользователя

    Returns:
        tuple: (np.ndarray, np.ndarray)
    """
    W1, W2 = np.broadcast_arrays(np.asarray(W1, complex), np.asarray(W2, complex))
    a1, b1, c1 = abc_values(Sigma1, W1, W2)
    a2, b2, c2 = abc_values(Sigma2, W2, W1)
    return two_user_rate_abc(a1, b1, c1, rho), two_user_rate_abc(a2, b2, c2, rho)


def high_snr_summary(Sigma1, Sigma2):
    """
    Величины η, τ, κ, χ, задающие оптимум при высоком SNR

    Returns:
        HighSnrSummary
    """
    pair = generalized_eig(Sigma1, Sigma2)
    tau1, tau2, tau3 = tau_coefficients(pair, Sigma2)
    eta1, eta2 = float(pair.values[0]), float(pair.values[1])
    kappa1 = eta1 * tau2 / (eta2 * tau1)
    kappa2 = tau2 / tau1
    return HighSnrSummary(
        eta1=eta1,
        eta2=eta2,
        tau1=tau1,
        tau2=tau2,
        tau3_abs=abs(tau3),
        kappa1=kappa1,
        kappa2=kappa2,
        chi1=condition_number(Sigma1),
        chi2=condition_number(Sigma2),
        degenerate=pair.degenerate,
    )


def sum_rate_high_snr_limit(s):
    """Предел суммарной скорости: κ₁log κ₁/(κ₁−1) + log κ₂/(κ₂−1)"""
    return float(kappa_log_ratio(s.kappa1) + log_ratio(s.kappa2))
