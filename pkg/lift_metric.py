"""
Лифт-метрика g̃ = α g₁ + β g₂ + γ g₃ на касательном расслоении в адаптированном
репере [горизонтальный блок | вертикальный блок]:

    g̃ = | α g   β g |
        | β g   γ g |

g₂ = 2 g_ij dx^i ⊗ δy^j понимается как симметричный тензор, у которого каждый
из двух внедиагональных блоков несёт β g.
"""
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from config import LIFT_PRESETS, SINGULAR_THRESHOLD, LiftSpec
from errors import ArgumentError
from logger import get_logger
from tensor_engine import TensorValue

logger = get_logger(__name__)

SINGULAR = "singular"
PSEUDO_RIEMANNIAN = "pseudo_riemannian"
RIEMANNIAN = "riemannian"

MatrixLike = Union[TensorValue, np.ndarray]


@dataclass(frozen=True)
class LiftCoefficients:
    """Тройка (α, β, γ)"""
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise ArgumentError(f"Коэффициент {name} должен быть конечным")

    @property
    def discriminant(self) -> float:
        """αγ - β²"""
        return self.alpha * self.gamma - self.beta ** 2

    @property
    def is_singular(self) -> bool:
        return abs(self.discriminant) < SINGULAR_THRESHOLD

    @classmethod
    def preset(cls, name: str) -> "LiftCoefficients":
        """Классические лифты: complete, diagonal, complete_plus_vertical, horizontal_plus_complete"""
        if name not in LIFT_PRESETS:
            raise ArgumentError(f"Неизвестный пресет лифта: {name}")
        return cls(*LIFT_PRESETS[name])

    @classmethod
    def from_spec(cls, spec: LiftSpec) -> "LiftCoefficients":
        return cls(spec.alpha, spec.beta, spec.gamma)

    def __add__(self, other: "LiftCoefficients") -> "LiftCoefficients":
        return LiftCoefficients(self.alpha + other.alpha, self.beta + other.beta, self.gamma + other.gamma)

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.alpha, self.beta, self.gamma)


@dataclass
class LiftMetricValue:
    """Матрица 2n×2n лифт-метрики в адаптированном репере"""
    matrix: np.ndarray
    coefficients: LiftCoefficients
    g: np.ndarray


def _as_matrix(g: MatrixLike) -> np.ndarray:
    data = g.data if isinstance(g, TensorValue) else np.asarray(g, dtype=float)
    if data.ndim != 2 or data.shape[0] != data.shape[1]:
        raise ArgumentError(f"Ожидалась квадратная матрица, получена форма {data.shape}")
    return data


def _check_symmetric(g: np.ndarray) -> None:
    scale = max(1.0, float(np.max(np.abs(g))))
    if np.max(np.abs(g - g.T)) > 1e-12 * scale:
        raise ArgumentError("Фундаментальный тензор несимметричен")


def lift_blocks(hh: np.ndarray, hv: np.ndarray, vh: np.ndarray, vv: np.ndarray) -> np.ndarray:
    return np.block([[hh, hv], [vh, vv]])


def build_lift_metric(g: MatrixLike, coeffs: LiftCoefficients) -> LiftMetricValue:
    """
    Собирает блочную матрицу g̃.

    Raises:
        ArgumentError: g несимметричен
    """
    g = _as_matrix(g)
    _check_symmetric(g)
    matrix = lift_blocks(coeffs.alpha * g, coeffs.beta * g, coeffs.beta * g, coeffs.gamma * g)
    return LiftMetricValue(matrix=matrix, coefficients=coeffs, g=g)


def signature_counts(matrix: np.ndarray, tolerance: float = 1e-12) -> Tuple[int, int, int]:
    """Число положительных, отрицательных и нулевых собственных значений"""
    eigenvalues = np.linalg.eigvalsh(0.5 * (matrix + matrix.T))
    scale = max(1.0, float(np.max(np.abs(eigenvalues))))
    positive = int(np.sum(eigenvalues > tolerance * scale))
    negative = int(np.sum(eigenvalues < -tolerance * scale))
    return positive, negative, len(eigenvalues) - positive - negative


def classify_lift(g: MatrixLike, coeffs: LiftCoefficients) -> str:
    """
    Классификация лифт-метрики: singular, pseudo_riemannian или riemannian.
    Результат сверяется со знаками собственных чисел собранной матрицы.

    Raises:
        ArgumentError: g не положительно определён (знаки собственных чисел
            не согласуются с классификацией по коэффициентам)
    """
    if coeffs.is_singular:
        verdict = SINGULAR
    elif coeffs.alpha > 0 and coeffs.gamma > 0 and coeffs.discriminant > 0:
        verdict = RIEMANNIAN
    else:
        verdict = PSEUDO_RIEMANNIAN

    lift = build_lift_metric(g, coeffs)
    n = lift.g.shape[0]
    positive, negative, zero = signature_counts(lift.matrix)
    expected = {
        RIEMANNIAN: lambda: positive == 2 * n,
        SINGULAR: lambda: zero >= n,
        PSEUDO_RIEMANNIAN: lambda: zero == 0 and negative > 0,
    }[verdict]
    if not expected():
        raise ArgumentError(
            f"Сигнатура ({positive}, {negative}, {zero}) не согласуется с классом {verdict}: "
            f"g не положительно определён"
        )
    logger.debug(f"Лифт-метрика {coeffs.as_tuple()}: {verdict}, сигнатура ({positive}, {negative}, {zero})")
    return verdict


def det_identity_residual(g: MatrixLike, coeffs: LiftCoefficients) -> float:
    """|det g̃ - (αγ - β²)^n (det g)²| / max(1, |det g̃|)"""
    lift = build_lift_metric(g, coeffs)
    n = lift.g.shape[0]
    direct = float(np.linalg.det(lift.matrix))
    formula = coeffs.discriminant ** n * float(np.linalg.det(lift.g)) ** 2
    return abs(direct - formula) / max(1.0, abs(direct))


def adapted_to_natural(N: np.ndarray) -> np.ndarray:
    """
    Матрица P = [[I, 0], [N, I]] (δy^h = dy^h + N^h_i dx^i): компоненты вектора в репере
    (δ_i, ∂̇_i) равны P·(компоненты в (∂_i, ∂̇_i)), компоненты ковектора в (dx, dy)
    равны Pᵀ·(компоненты в (dx, δy)).
    """
    n = N.shape[0]
    return np.block([[np.eye(n), np.zeros((n, n))], [N, np.eye(n)]])


def lift_metric_natural(lift: LiftMetricValue, N: np.ndarray) -> np.ndarray:
    """g̃ в натуральных координатах (x, y): Pᵀ g̃ P"""
    P = adapted_to_natural(N)
    return P.T @ lift.matrix @ P
