"""
Малые эрмитовы матрицы: спектральное разложение, матричные корни,
обобщённые собственные векторы, а также геометрия многообразия Грассмана G(M,1).
"""
import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from utils.errors import DimensionError, DomainError, SingularMatrixError

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
# Относительный порог отсечения отрицательных собственных значений
PSD_CLAMP = 1e-12
# Относительная щель, ниже которой спектр считается вырожденным
DEGENERATE_GAP = 1e-10
# Модуль, начиная с которого координата считается значимой для фазы
PHASE_TOL = 1e-9


def canonical_phase(vectors):
    """
    Нормирует векторы и поворачивает фазу так, чтобы первая значимая координата
    была вещественной и неотрицательной

    Args:
        vectors: Массив формы (M,) или (n, M)

    Returns:
        np.ndarray: Канонические представители той же формы
    """
    arr = np.array(vectors, dtype=complex)
    single = arr.ndim == 1
    rows = np.atleast_2d(arr)
    norms = np.linalg.norm(rows, axis=1)
    if np.any(norms == 0):
        raise DomainError("нулевой вектор не задаёт точку многообразия Грассмана")
    off = np.abs(norms - 1.0) > 1e-15
    if np.any(off):
        rows[off] = rows[off] / norms[off, None]

    mags = np.abs(rows)
    idx = np.argmax(mags > PHASE_TOL, axis=1)
    picks = np.arange(rows.shape[0])
    lead = rows[picks, idx]
    # Уже канонические строки не трогаем: нормализация идемпотентна побитово
    turn = (lead.imag != 0.0) | (lead.real < 0.0)
    if np.any(turn):
        rotation = np.conj(lead[turn] / np.abs(lead[turn]))
        rows[turn] = rows[turn] * rotation[:, None]
        rows[picks[turn], idx[turn]] = np.abs(lead[turn])

    changed = off | turn
    new_norms = np.linalg.norm(rows, axis=1)
    drift = changed & (np.abs(new_norms - 1.0) > 1e-15)
    if np.any(drift):
        rows[drift] = rows[drift] / new_norms[drift, None]
    return rows[0] if single else rows


@dataclass(frozen=True, eq=False)
class Covariance:
    """
    Эрмитова неотрицательно определённая матрица Σ размера M×M

    Args:
        matrix: Комплексная матрица (list или np.ndarray)
    """

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 2:
            raise DimensionError(f"ожидалась квадратная матрица M×M, M ≥ 2, получено {mat.shape}")
        scale = max(1.0, float(np.max(np.abs(mat))))
        if np.max(np.abs(mat - mat.conj().T)) > HERMITIAN_TOL * scale:
            raise DomainError("матрица не эрмитова")
        mat = (mat + mat.conj().T) / 2.0
        lam = np.linalg.eigvalsh(mat)
        if lam[-1] <= 0:
            raise DomainError("матрица должна иметь положительное собственное значение")
        if lam[0] < -PSD_CLAMP * lam[-1]:
            raise DomainError(f"матрица не является неотрицательно определённой (λ_min = {lam[0]:.3e})")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def trace_normalized(self):
        """Tr(Σ) = M"""
        return bool(abs(np.trace(self.matrix).real - self.dim) < 1e-9)

    @classmethod
    def from_pairs(cls, rows):
        """Создаёт матрицу из строк с элементами [re, im]"""
        arr = np.asarray(rows, dtype=float)
        if arr.ndim != 3 or arr.shape[-1] != 2:
            raise DimensionError("ожидались строки из пар [re, im]")
        return cls(arr[..., 0] + 1j * arr[..., 1])

    def to_pairs(self):
        """Строки с элементами [re, im] для JSON"""
        return [[[float(v.real), float(v.imag)] for v in row] for row in self.matrix]

    def scaled(self, factor):
        return Covariance(self.matrix * factor)


@dataclass(frozen=True, eq=False)
class GrassmannVector:
    """Единичный комплексный вектор с канонической фазой (точка G(M,1))"""

    coords: np.ndarray

    def __post_init__(self):
        coords = canonical_phase(np.asarray(self.coords, dtype=complex).ravel())
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    @property
    def dim(self):
        return self.coords.shape[0]

    def overlap(self, other):
        """|w^H v|"""
        _check_dims(self, other)
        return float(abs(np.vdot(self.coords, other.coords)))


@dataclass
class EigenDecomposition:
    values: np.ndarray
    vectors: List[GrassmannVector]
    degenerate: bool = False

    @property
    def basis(self):
        """Матрица U со столбцами u_k"""
        return np.column_stack([v.coords for v in self.vectors])


@dataclass
class GenEigenPair:
    """
    Обобщённые собственные пары A x = σ B x, σ по убыванию

    whitened хранит собственные векторы v_k обелённой матрицы B^{-1/2} A B^{-1/2}
    """

    values: np.ndarray
    vectors: List[GrassmannVector]
    whitened: np.ndarray = field(repr=False, default=None)
    degenerate: bool = False


def _check_dims(*items):
    dims = {item.dim for item in items}
    if len(dims) != 1:
        raise DimensionError(f"несовпадающие размерности: {sorted(dims)}")


def _as_matrix(S):
    return S.matrix if isinstance(S, Covariance) else np.asarray(S, dtype=complex)


def _eigh_2x2(mat):
    """Замкнутое решение для 2×2: λ = (a+d)/2 ± √(((a−d)/2)² + |b|²)"""
    a, d = mat[0, 0].real, mat[1, 1].real
    b = mat[0, 1]
    half = (a - d) / 2.0
    radius = np.hypot(half, abs(b))
    lam1 = (a + d) / 2.0 + radius
    lam2 = (a + d) / 2.0 - radius
    if lam1 > 0 and lam2 < 0.5 * lam1:
        # меньший корень через определитель, без вычитания близких чисел
        lam2 = (a * d - abs(b) ** 2) / lam1

    scale = max(abs(a), abs(d), 1e-300)
    if abs(b) <= 1e-15 * scale:
        v1 = np.array([1.0, 0.0], dtype=complex) if a >= d else np.array([0.0, 1.0], dtype=complex)
    else:
        p = np.array([b, lam1 - a], dtype=complex)
        q = np.array([lam1 - d, np.conj(b)], dtype=complex)
        v1 = p if np.linalg.norm(p) >= np.linalg.norm(q) else q
        v1 = v1 / np.linalg.norm(v1)
    v2 = np.array([-np.conj(v1[1]), np.conj(v1[0])])
    return np.array([lam1, lam2]), np.column_stack([v1, v2])


def eigh(S):
    """
    Спектральное разложение эрмитовой матрицы, λ₁ ≥ … ≥ λ_M

    Args:
        S: Covariance или эрмитова матрица

    Returns:
        EigenDecomposition: значения, канонические векторы и флаг вырождения
    """
    mat = _as_matrix(S)
    if mat.shape[0] == 2:
        values, basis = _eigh_2x2(mat)
    else:
        values, basis = np.linalg.eigh(mat)
        values, basis = values[::-1], basis[:, ::-1]

    top = max(abs(values[0]), 1e-300)
    values = np.where(values < 0, np.where(values >= -PSD_CLAMP * top, 0.0, values), values)
    gaps = values[:-1] - values[1:]
    degenerate = bool(np.any(gaps < DEGENERATE_GAP * top))
    if degenerate:
        logger.debug("вырожденный спектр: %s", values)
    vectors = [GrassmannVector(basis[:, k]) for k in range(basis.shape[1])]
    return EigenDecomposition(values=np.asarray(values, dtype=float), vectors=vectors, degenerate=degenerate)


def _function_of(S, fn):
    dec = eigh(S)
    U = dec.basis
    return (U * fn(dec.values)) @ U.conj().T, dec


def sqrtm_psd(S):
    """
    Эрмитов квадратный корень R: R·R = S

    Returns:
        Covariance
    """
    root, _ = _function_of(S, lambda lam: np.sqrt(np.clip(lam, 0.0, None)))
    return Covariance(root)


def inv_sqrtm_pd(S):
    """
    Обратный квадратный корень R: R·S·R = I

    Raises:
        SingularMatrixError: если S вырождена
    """
    dec = eigh(S)
    if dec.values[-1] <= PSD_CLAMP * dec.values[0]:
        raise SingularMatrixError(f"матрица вырождена (λ_min = {dec.values[-1]:.3e}), нужна положительно определённая")
    U = dec.basis
    return Covariance((U / np.sqrt(dec.values)) @ U.conj().T)


def generalized_eig(A, B):
    """
    Обобщённые собственные пары A x = σ B x через обеление B^{-1/2} A B^{-1/2}

    Args:
        A (Covariance): Неотрицательно определённая матрица
        B (Covariance): Положительно определённая матрица

    Returns:
        GenEigenPair: σ по убыванию, нормированные векторы x_k и обелённые v_k
    """
    _check_dims(A, B)
    W = inv_sqrtm_pd(B).matrix
    whitened = W @ A.matrix @ W
    dec = eigh((whitened + whitened.conj().T) / 2.0)
    V = dec.basis
    values = dec.values
    top = max(values[0], 1e-300)
    if values[0] - values[-1] < DEGENERATE_GAP * top:
        # A ∝ B: любой базис оптимален, берём собственные векторы A
        logger.debug("обобщённый спектр вырожден, выбираются собственные векторы первой матрицы")
        root_b = sqrtm_psd(B).matrix
        X = eigh(A).basis
        V = canonical_phase((root_b @ X).T).T
        return GenEigenPair(
            values=values,
            vectors=[GrassmannVector(X[:, k]) for k in range(X.shape[1])],
            whitened=V,
            degenerate=True,
        )
    X = W @ V
    vectors = [GrassmannVector(X[:, k]) for k in range(X.shape[1])]
    return GenEigenPair(values=values, vectors=vectors, whitened=V, degenerate=dec.degenerate)


def tau_coefficients(genpair, Sigma2) -> Tuple[float, float, complex]:
    """
    τ₁ = v₁^H Σ₂^{-1} v₁, τ₂ = v₂^H Σ₂^{-1} v₂, τ₃ = v₁^H Σ₂^{-1} v₂

    Args:
        genpair (GenEigenPair): Результат generalized_eig(Σ₁, Σ₂)
        Sigma2 (Covariance): Вторая ковариация

    Returns:
        tuple: (τ₁, τ₂, τ₃), τ₃ комплексное
    """
    inv_root = inv_sqrtm_pd(Sigma2).matrix
    inverse = inv_root @ inv_root
    v1, v2 = genpair.whitened[:, 0], genpair.whitened[:, 1]
    tau1 = float(np.real(np.conj(v1) @ inverse @ v1))
    tau2 = float(np.real(np.conj(v2) @ inverse @ v2))
    tau3 = complex(np.conj(v1) @ inverse @ v2)
    return tau1, tau2, tau3


def chordal_distance(w1, w2):
    """√(1 − |w₁^H w₂|²), вычисляется как ‖w₂ − (w₁^H w₂)·w₁‖"""
    _check_dims(w1, w2)
    a, b = w1.coords, w2.coords
    residual = b - np.vdot(a, b) * a
    return float(min(1.0, np.linalg.norm(residual)))


def abc_values(S, w1, w2):
    """Тройка (A, B, C) = (w₁^H Σ w₁, w₂^H Σ w₂, |w₁^H Σ w₂|) для векторов-массивов"""
    mat = _as_matrix(S)
    a = np.real(np.einsum("...i,ij,...j->...", np.conj(w1), mat, w1))
    b = np.real(np.einsum("...i,ij,...j->...", np.conj(w2), mat, w2))
    c = np.abs(np.einsum("...i,ij,...j->...", np.conj(w1), mat, w2))
    return np.clip(a, 0.0, None), np.clip(b, 0.0, None), c


def d_sigma(S, w1, w2):
    """
    Полуметрика d_Σ = √(4(AB − C²))/(A + B) ∈ [0, 1]

    При Σ = λI совпадает с хордовым расстоянием; неравенство треугольника не выполняется.
    """
    _check_dims(S, w1, w2)
    a, b, c = abc_values(S, w1.coords, w2.coords)
    det = max(0.0, float(a * b - c * c))
    if a + b <= 0:
        return 0.0
    return float(min(1.0, 2.0 * np.sqrt(det) / (a + b)))


def condition_number(S):
    """χ = λ₁/λ_M"""
    dec = eigh(S)
    if dec.values[-1] <= 0:
        raise SingularMatrixError("число обусловленности не определено для вырожденной матрицы")
    return float(dec.values[0] / dec.values[-1])


def random_covariance(rng, dim=2, trace_normalize=True):
    """
    Случайная положительно определённая ковариация G G^H + 0.05·I

    Args:
        rng (np.random.Generator): Источник случайности
        dim (int): Размерность M
        trace_normalize (bool): Нормировать Tr(Σ) = M
    """
    G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    mat = G @ G.conj().T + 0.05 * np.eye(dim)
    if trace_normalize:
        mat = mat * dim / np.trace(mat).real
    return Covariance(mat)


def random_grassmann(rng, dim=2, count=None):
    """Изотропно распределённые точки G(M,1): нормированные комплексные гауссовские векторы"""
    shape = (dim,) if count is None else (count, dim)
    raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return canonical_phase(raw)
