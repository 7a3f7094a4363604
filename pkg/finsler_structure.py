"""
Финслеровы структуры: встроенные семейства, структуры из выражений и
выборочная проверка аксиом (гладкость вне нулевого сечения, положительная
1-однородность по y, положительная определённость вертикального гессиана F^2).
"""
import itertools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import MAX_DIMENSION, StructureSpec
from errors import ArgumentError, DomainError
from expression_parser import ExprTree, parse_expression
from jet_arithmetic import MAX_ORDER, Jet, JetBasis, get_basis, seed_variable
from logger import get_logger

logger = get_logger(__name__)

DEFAULT_MIN_FIBER_NORM = 1e-6
VALIDATION_RADII = (0.5, 1.0, 2.0)
GOLDEN = (1 + math.sqrt(5)) / 2

ExprLike = Union[str, float, int, ExprTree]
Value = Union[float, Jet]


@dataclass(frozen=True)
class TangentSample:
    """
    Точка (x, y) касательного расслоения вне нулевого сечения.

    Raises:
        DomainError: |y| меньше min_fiber_norm
    """
    x: Tuple[float, ...]
    y: Tuple[float, ...]
    min_fiber_norm: float = field(default=DEFAULT_MIN_FIBER_NORM, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        if len(self.x) != len(self.y) or not self.x:
            raise ArgumentError(
                f"Размерности x и y не совпадают: {len(self.x)} и {len(self.y)}"
            )
        if math.sqrt(sum(v * v for v in self.y)) < self.min_fiber_norm:
            raise DomainError("Точка на нулевом сечении", sample=self)

    @property
    def dimension(self) -> int:
        return len(self.x)

    @property
    def point(self) -> np.ndarray:
        """Координаты (x, y) одним массивом длины 2n"""
        return np.array(self.x + self.y)

    def with_fiber(self, y: Sequence[float]) -> "TangentSample":
        return TangentSample(self.x, tuple(y), self.min_fiber_norm)

    def shifted(self, delta: Sequence[float]) -> "TangentSample":
        """Сдвиг на вектор delta длины 2n"""
        moved = self.point + np.asarray(delta, dtype=float)
        n = self.dimension
        return TangentSample(tuple(moved[:n]), tuple(moved[n:]), self.min_fiber_norm)


@dataclass
class ValidationReport:
    """Результат выборочной проверки"""
    name: str
    passed: bool
    max_residual: float
    tolerance: float
    checked: int = 0
    failures: List[str] = field(default_factory=list)
    rejected: List[str] = field(default_factory=list)


def _as_tree(value: ExprLike, dimension: int, label: str) -> ExprTree:
    tree = value if isinstance(value, ExprTree) else parse_expression(str(value), dimension)
    if tree.uses_y:
        raise ArgumentError(f"Коэффициент {label} не должен зависеть от y: {tree.text or tree.pretty()}")
    return tree


def _quadratic_form(a: Optional[List[List[ExprTree]]], xs: Sequence[Value],
                    ys: Sequence[Value], basis: JetBasis) -> Jet:
    """Σ a_ij(x) y^i y^j; a = None означает единичную матрицу"""
    n = len(ys)
    total = Jet.constant(0.0, basis)
    for i in range(n):
        if a is None:
            total = total + ys[i] * ys[i]
            continue
        for j in range(i, n):
            coefficient = a[i][j].evaluate_jet(xs, ys, basis)
            term = coefficient * ys[i] * ys[j]
            total = total + (term if i == j else 2.0 * term)
    return total


def _linear_form(b: List[ExprTree], xs: Sequence[Value], ys: Sequence[Value], basis: JetBasis) -> Jet:
    total = Jet.constant(0.0, basis)
    for i, coefficient in enumerate(b):
        total = total + coefficient.evaluate_jet(xs, ys, basis) * ys[i]
    return total


class FinslerStructure(ABC):
    """
    Базовый класс финслеровой структуры F(x, y).
    Переменные джетов: x1..xn имеют номера 0..n-1, y1..yn - номера n..2n-1.
    """

    kind: str = "abstract"

    def __init__(self, dimension: int, source_text: Optional[str] = None):
        if not 1 <= dimension <= MAX_DIMENSION:
            raise ArgumentError(f"Размерность вне диапазона [1, {MAX_DIMENSION}]: {dimension}")
        self.dimension = dimension
        self.source_text = source_text

    @abstractmethod
    def _function(self, xs: Sequence[Jet], ys: Sequence[Jet], basis: JetBasis) -> Jet:
        """Джет F по джетам координат"""

    def _squared(self, xs: Sequence[Jet], ys: Sequence[Jet], basis: JetBasis) -> Jet:
        f = self._function(xs, ys, basis)
        return f * f

    def _check_sample(self, sample: TangentSample, xs: Sequence[Jet], ys: Sequence[Jet]) -> None:
        """Дополнительные ограничения семейства на точку"""

    @property
    def params(self) -> Dict[str, Any]:
        return {}

    def seed(self, sample: TangentSample, order: int) -> Tuple[List[Jet], List[Jet], JetBasis]:
        """Джеты координат x и y в точке"""
        if sample.dimension != self.dimension:
            raise ArgumentError(
                f"Размерность точки {sample.dimension} не совпадает с размерностью структуры {self.dimension}"
            )
        if not 0 <= order <= MAX_ORDER:
            raise ArgumentError(f"Порядок вне диапазона [0, {MAX_ORDER}]: {order}")
        num_vars = 2 * self.dimension
        basis = get_basis(num_vars, order)
        values = sample.x + sample.y
        if order == 0:
            jets = [Jet.constant(v, basis) for v in values]
        else:
            jets = [seed_variable(v, i, num_vars, order) for i, v in enumerate(values)]
        return jets[:self.dimension], jets[self.dimension:], basis

    def _evaluate(self, sample: TangentSample, order: int, squared: bool) -> Jet:
        xs, ys, basis = self.seed(sample, order)
        try:
            self._check_sample(sample, xs, ys)
            return self._squared(xs, ys, basis) if squared else self._function(xs, ys, basis)
        except DomainError as e:
            if e.sample is not None:
                raise
            raise DomainError(str(e), sample=sample) from None

    def evaluate_F(self, sample: TangentSample, order: int) -> Jet:
        """Джет F по всем 2n переменным (сначала x, затем y)"""
        return self._evaluate(sample, order, squared=False)

    def squared_jet(self, sample: TangentSample, order: int) -> Jet:
        """Джет F^2"""
        return self._evaluate(sample, order, squared=True)

    def value(self, sample: TangentSample) -> float:
        return float(self.evaluate_F(sample, 0).value)

    def squared_value(self, sample: TangentSample) -> float:
        return float(self.squared_jet(sample, 0).value)

    def describe(self) -> Dict[str, Any]:
        """Метаданные структуры для отчётов"""
        info: Dict[str, Any] = {"kind": self.kind, "dimension": self.dimension}
        info.update(self.params)
        if self.source_text:
            info["text"] = self.source_text
        return info

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(dimension={self.dimension})"


class RiemannianStructure(FinslerStructure):
    """F = sqrt(a_ij(x) y^i y^j); F^2 вычисляется как точная квадратичная форма"""

    kind = "riemannian"

    def __init__(self, a: Sequence[Sequence[ExprLike]], dimension: Optional[int] = None):
        dimension = dimension or len(a)
        super().__init__(dimension)
        if len(a) != dimension or any(len(row) != dimension for row in a):
            raise ArgumentError(f"Матрица a должна быть {dimension}x{dimension}")
        self.a = [[_as_tree(v, dimension, f"a[{i}][{j}]") for j, v in enumerate(row)]
                  for i, row in enumerate(a)]
        _check_symmetric(self.a, dimension)

    @property
    def params(self) -> Dict[str, Any]:
        return {"a": [[t.pretty() for t in row] for row in self.a]}

    def _squared(self, xs, ys, basis):
        return _quadratic_form(self.a, xs, ys, basis)

    def _function(self, xs, ys, basis):
        return self._squared(xs, ys, basis).sqrt()

    def metric_matrix(self, x: Sequence[float]) -> np.ndarray:
        return np.array([[t.evaluate(x) for t in row] for row in self.a])


class EuclideanStructure(RiemannianStructure):
    """F = |y|"""

    kind = "euclidean"

    def __init__(self, dimension: int):
        FinslerStructure.__init__(self, dimension)
        self.a = None

    @property
    def params(self) -> Dict[str, Any]:
        return {}

    def metric_matrix(self, x: Sequence[float]) -> np.ndarray:
        return np.eye(self.dimension)


class RandersStructure(FinslerStructure):
    """F = sqrt(a_ij(x) y^i y^j) + b_i(x) y^i"""

    kind = "randers"

    def __init__(self, a: Optional[Sequence[Sequence[ExprLike]]], b: Sequence[ExprLike]):
        dimension = len(b)
        super().__init__(dimension)
        if a is None:
            a = [[1 if i == j else 0 for j in range(dimension)] for i in range(dimension)]
        if len(a) != dimension or any(len(row) != dimension for row in a):
            raise ArgumentError(f"Матрица a должна быть {dimension}x{dimension}")
        self.a = [[_as_tree(v, dimension, f"a[{i}][{j}]") for j, v in enumerate(row)]
                  for i, row in enumerate(a)]
        self.b = [_as_tree(v, dimension, f"b[{i}]") for i, v in enumerate(b)]
        _check_symmetric(self.a, dimension)

    @property
    def params(self) -> Dict[str, Any]:
        return {
            "a": [[t.pretty() for t in row] for row in self.a],
            "b": [t.pretty() for t in self.b],
        }

    def _function(self, xs, ys, basis):
        return _quadratic_form(self.a, xs, ys, basis).sqrt() + _linear_form(self.b, xs, ys, basis)

    def metric_matrix(self, x: Sequence[float]) -> np.ndarray:
        return np.array([[t.evaluate(x) for t in row] for row in self.a])

    def covector(self, x: Sequence[float]) -> np.ndarray:
        return np.array([t.evaluate(x) for t in self.b])


class KropinaStructure(RandersStructure):
    """F = a_ij(x) y^i y^j / (b_i(x) y^i); определена только при b_i y^i > 0"""

    kind = "kropina"

    def _check_sample(self, sample, xs, ys):
        basis = xs[0].basis
        value = float(_linear_form(self.b, xs, ys, basis).value)
        if value <= 0:
            raise DomainError(f"Для структуры Кропиной нужно b_i y^i > 0, получено {value:.6g}", sample=sample)

    def _function(self, xs, ys, basis):
        return _quadratic_form(self.a, xs, ys, basis) / _linear_form(self.b, xs, ys, basis)


class ExpressionStructure(FinslerStructure):
    """F задана выражением языка структур"""

    kind = "expression"

    def __init__(self, text: str, dimension: int):
        super().__init__(dimension, source_text=text)
        self.tree = parse_expression(text, dimension)

    def _function(self, xs, ys, basis):
        return self.tree.evaluate_jet(xs, ys, basis)


def _check_symmetric(a: List[List[ExprTree]], dimension: int) -> None:
    for x in validation_base_points(dimension):
        matrix = np.array([[t.evaluate(x) for t in row] for row in a])
        if not np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-12):
            raise ArgumentError(f"Матрица a несимметрична в точке x={tuple(x)}")


# ----------------------------------------------------------------------
# Сетки точек
# ----------------------------------------------------------------------

def base_lattice(dimension: int, lower: float = -1.0, upper: float = 1.0, count: int = 3) -> List[Tuple[float, ...]]:
    """Решётка count^n базовых точек в кубе [lower, upper]^n"""
    if count == 1:
        axis = [0.5 * (lower + upper)]
    else:
        axis = [float(v) for v in np.linspace(lower, upper, count)]
    return list(itertools.product(axis, repeat=dimension))


def validation_base_points(dimension: int) -> List[Tuple[float, ...]]:
    return base_lattice(dimension)


def fiber_directions(dimension: int, count: int = 8) -> np.ndarray:
    """
    Детерминированные единичные направления в слое. Для n=2 - равномерные углы
    со сдвигом от осей, для n=3 - спираль Фибоначчи, для n=4 - торическая спираль
    с шагами по золотому сечению.
    """
    directions = []
    for k in range(count):
        if dimension == 2:
            angle = 2 * math.pi * (k + 0.25) / count
            directions.append((math.cos(angle), math.sin(angle)))
        elif dimension == 3:
            z = 1 - 2 * (k + 0.5) / count
            r = math.sqrt(max(0.0, 1 - z * z))
            angle = 2 * math.pi * k / GOLDEN
            directions.append((r * math.cos(angle), r * math.sin(angle), z))
        elif dimension == 4:
            t = (k + 0.5) / count
            first = 2 * math.pi * k / GOLDEN
            second = 2 * math.pi * k / GOLDEN ** 2
            directions.append((
                math.sqrt(t) * math.cos(first), math.sqrt(t) * math.sin(first),
                math.sqrt(1 - t) * math.cos(second), math.sqrt(1 - t) * math.sin(second),
            ))
        else:
            raise ArgumentError(f"Направления в слое поддерживаются для n от 2 до 4, получено {dimension}")
    return np.array(directions)


def default_validation_grid(dimension: int, lower: float = -1.0, upper: float = 1.0, count: int = 3,
                            directions: int = 8, radii: Sequence[float] = VALIDATION_RADII,
                            min_fiber_norm: float = DEFAULT_MIN_FIBER_NORM) -> List[TangentSample]:
    """Базовые точки решётки × направления на единичной сфере × радиусы"""
    samples = []
    unit = fiber_directions(dimension, directions)
    for x in base_lattice(dimension, lower, upper, count):
        for radius in radii:
            for direction in unit:
                samples.append(TangentSample(x, tuple(radius * direction), min_fiber_norm))
    return samples


# ----------------------------------------------------------------------
# Конструкторы
# ----------------------------------------------------------------------

def make_riemannian(a: Sequence[Sequence[ExprLike]],
                    validation_points: Optional[Sequence[Sequence[float]]] = None) -> RiemannianStructure:
    """Риманова структура с проверкой положительной определённости a на сетке"""
    structure = RiemannianStructure(a)
    _check_positive_definite(structure, validation_points)
    return structure


def make_randers(a: Optional[Sequence[Sequence[ExprLike]]], b: Sequence[ExprLike],
                 validation_points: Optional[Sequence[Sequence[float]]] = None) -> RandersStructure:
    """
    Создаёт структуру Рандерса F = sqrt(a_ij y^i y^j) + b_i y^i.

    Args:
        a: Симметричная матрица выражений от x (None - единичная)
        b: Ковектор выражений от x
        validation_points: Базовые точки проверки (по умолчанию решётка 3^n в [-1, 1]^n)

    Raises:
        ArgumentError: a не положительно определена или ‖b‖_a >= 1 в какой-либо точке
    """
    structure = RandersStructure(a, b)
    points = validation_points or validation_base_points(structure.dimension)
    _check_positive_definite(structure, points)
    for x in points:
        matrix = structure.metric_matrix(x)
        covector = structure.covector(x)
        norm = math.sqrt(float(covector @ np.linalg.solve(matrix, covector)))
        if norm >= 1:
            raise ArgumentError(
                f"Норма ‖b‖_a = {norm:.6g} >= 1 в точке x={tuple(x)}: структура не является финслеровой"
            )
    logger.debug(f"Создана структура Рандерса размерности {structure.dimension}")
    return structure


def make_kropina(a: Optional[Sequence[Sequence[ExprLike]]], b: Sequence[ExprLike],
                 validation_points: Optional[Sequence[Sequence[float]]] = None) -> KropinaStructure:
    structure = KropinaStructure(a, b)
    _check_positive_definite(structure, validation_points)
    return structure


def _check_positive_definite(structure: Union[RiemannianStructure, RandersStructure],
                             points: Optional[Sequence[Sequence[float]]] = None) -> None:
    for x in points or validation_base_points(structure.dimension):
        eigenvalues = np.linalg.eigvalsh(structure.metric_matrix(x))
        if eigenvalues.min() <= 0:
            raise ArgumentError(f"Матрица a не положительно определена в точке x={tuple(x)}")


class StructureFactory:
    """
    Фабрика финслеровых структур по описанию из конфигурации.
    """

    @staticmethod
    def create(spec: StructureSpec,
               validation_points: Optional[Sequence[Sequence[float]]] = None) -> FinslerStructure:
        """
        Создает структуру по спецификации.

        Args:
            spec: Описание структуры (kind, dimension, a, b, text)
            validation_points: Базовые точки проверки параметров (по умолчанию решётка 3^n в [-1, 1]^n)

        Returns:
            Экземпляр структуры

        Raises:
            ArgumentError: Если параметры структуры недопустимы
        """
        if spec.kind == "euclidean":
            structure = EuclideanStructure(spec.dimension)
        elif spec.kind == "riemannian":
            structure = make_riemannian(spec.a, validation_points)
        elif spec.kind == "randers":
            structure = make_randers(spec.a, spec.b, validation_points)
        elif spec.kind == "kropina":
            structure = make_kropina(spec.a, spec.b, validation_points)
        elif spec.kind == "expression":
            structure = ExpressionStructure(spec.text, spec.dimension)
        else:
            raise ArgumentError(f"Неизвестный тип структуры: {spec.kind}")
        logger.info(f"Создана структура {structure.kind} размерности {structure.dimension}")
        return structure


# ----------------------------------------------------------------------
# Операции уровня модуля и проверки аксиом
# ----------------------------------------------------------------------

def evaluate_F(structure: FinslerStructure, sample: TangentSample, order: int) -> Jet:
    return structure.evaluate_F(sample, order)


def check_homogeneity(structure: FinslerStructure, samples: Sequence[TangentSample],
                      lambdas: Sequence[float] = (0.5, 2.0, 3.0),
                      tolerance: float = 1e-9) -> ValidationReport:
    """
    Проверяет F(x, λy) = λ F(x, y). Невязка - относительная, |F(x,λy) - λF| / (λF).

    Raises:
        ArgumentError: среди lambdas есть неположительные
    """
    if any(lam <= 0 for lam in lambdas):
        raise ArgumentError("Все множители λ должны быть положительными")
    report = ValidationReport("homogeneity", passed=True, max_residual=0.0, tolerance=tolerance)
    for sample in samples:
        try:
            base = structure.value(sample)
            for lam in lambdas:
                scaled = structure.value(sample.with_fiber(tuple(lam * v for v in sample.y)))
                residual = abs(scaled - lam * base) / max(abs(lam * base), 1e-300)
                report.max_residual = max(report.max_residual, residual)
                if residual > tolerance:
                    report.failures.append(f"λ={lam:g}: {residual:.3e} ({_where(sample)})")
            report.checked += 1
        except DomainError as e:
            report.rejected.append(str(e))
    _finish(report)
    return report


def check_positivity(structure: FinslerStructure, samples: Sequence[TangentSample]) -> ValidationReport:
    """F > 0 вне нулевого сечения"""
    report = ValidationReport("positivity", passed=True, max_residual=0.0, tolerance=0.0)
    for sample in samples:
        try:
            value = structure.value(sample)
        except DomainError as e:
            report.rejected.append(str(e))
            continue
        report.checked += 1
        if value <= 0:
            report.max_residual = max(report.max_residual, -value)
            report.failures.append(f"F={value:.6g} ({_where(sample)})")
    _finish(report)
    return report


def check_euler_identity(structure: FinslerStructure, samples: Sequence[TangentSample],
                         tolerance: float = 1e-9) -> ValidationReport:
    """y^i ∂̇_i F = F (следствие теоремы Эйлера), относительная невязка"""
    n = structure.dimension
    report = ValidationReport("euler_identity", passed=True, max_residual=0.0, tolerance=tolerance)
    for sample in samples:
        try:
            jet = structure.evaluate_F(sample, 1)
        except DomainError as e:
            report.rejected.append(str(e))
            continue
        report.checked += 1
        value = float(jet.value)
        contracted = sum(sample.y[i] * float(jet.partial((n + i,))) for i in range(n))
        residual = abs(contracted - value) / max(abs(value), 1e-300)
        report.max_residual = max(report.max_residual, residual)
        if residual > tolerance:
            report.failures.append(f"{residual:.3e} ({_where(sample)})")
    _finish(report)
    return report


def check_strong_convexity(structure: FinslerStructure, samples: Sequence[TangentSample],
                           tolerance: float = 1e-10) -> ValidationReport:
    """
    Положительная определённость g_ij во всех точках. Невязка - доля
    наименьшего собственного значения относительно наибольшего, взятая со знаком минус.
    """
    from tensor_engine import fundamental_tensor

    report = ValidationReport("strong_convexity", passed=True, max_residual=0.0, tolerance=tolerance)
    for sample in samples:
        try:
            g = fundamental_tensor(structure, sample).data
        except DomainError as e:
            report.rejected.append(str(e))
            continue
        report.checked += 1
        eigenvalues = np.linalg.eigvalsh(0.5 * (g + g.T))
        scale = max(abs(eigenvalues).max(), 1e-300)
        ratio = eigenvalues.min() / scale
        report.max_residual = max(report.max_residual, -ratio)
        if ratio <= tolerance:
            report.failures.append(f"λ_min/λ_max={ratio:.3e} ({_where(sample)})")
    _finish(report)
    return report


def _where(sample: TangentSample) -> str:
    return f"x={sample.x}, y={sample.y}"


def _finish(report: ValidationReport) -> None:
    report.passed = report.checked > 0 and not report.failures
    if report.failures:
        logger.warning(f"✗ Проверка {report.name}: {len(report.failures)} нарушений, "
                       f"максимальная невязка {report.max_residual:.3e}")
    else:
        logger.debug(f"✓ Проверка {report.name}: {report.checked} точек, "
                     f"максимальная невязка {report.max_residual:.3e}")
    if report.rejected:
        logger.warning(f"Проверка {report.name}: отклонено точек вне области определения: {len(report.rejected)}")
