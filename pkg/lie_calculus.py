"""
Векторные поля на базе, их полные лифты и производные Ли.

Полный лифт поля V = v^i ∂_i в натуральных координатах:
    X^c = v^a ∂_a + y^b ∂_b v^a ∂̇_a,
в адаптированном репере X^c = v^i δ_i + y^j ∇_j v^i ∂̇_i.

Производная Ли тензорного поля на TM вдоль X^c собирается по шаблону
    £T = X^c(T) - Σ_верхние T^..a.. ∂_a v^h + Σ_нижние T_..a.. ∂_i v^a,
для N и связности Картана к нему добавляются неоднородные слагаемые
со вторыми производными v.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from errors import ArgumentError
from expression_parser import ExprTree, parse_expression
from finite_difference import DEFAULT_STEP, fd_delta, fd_gradient
from finsler_structure import FinslerStructure, TangentSample
from jet_arithmetic import Jet, JetBasis, contract, get_basis, seed_variable
from lift_metric import LiftCoefficients, adapted_to_natural, build_lift_metric, lift_blocks, lift_metric_natural
from logger import get_logger
from tensor_engine import (
    CURVATURE_ORDER, HORIZONTAL, LOWER, UPPER, GeometryJets, TensorValue, lower, upper,
)

logger = get_logger(__name__)

_AXIS_LETTERS = "abcdefgh"

FORM_COEFFICIENTS = {
    "g1": LiftCoefficients(1.0, 0.0, 0.0),
    "g2": LiftCoefficients(0.0, 1.0, 0.0),
    "g3": LiftCoefficients(0.0, 0.0, 1.0),
}


@dataclass(frozen=True)
class VectorFieldOnM:
    """
    Векторное поле V = v^i(x) ∂_i на базе.

    Raises:
        ArgumentError: компонента зависит от y или поле пустое
    """
    components: Tuple[ExprTree, ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise ArgumentError("Векторное поле без компонент")
        for i, tree in enumerate(self.components):
            if tree.uses_y:
                raise ArgumentError(f"Компонента v^{i + 1} поля {self.name!r} зависит от y")

    @classmethod
    def from_strings(cls, components: Sequence[str], dimension: int, name: str = "") -> "VectorFieldOnM":
        if len(components) != dimension:
            raise ArgumentError(f"Поле {name!r}: ожидалось {dimension} компонент, получено {len(components)}")
        return cls(tuple(parse_expression(str(c), dimension) for c in components), name=name)

    @property
    def dimension(self) -> int:
        return len(self.components)

    def jets(self, xs: Sequence[Jet], basis: JetBasis) -> Jet:
        """Тензорный джет (v^1, ..., v^n) над переменными базиса xs"""
        return Jet.stack([tree.evaluate_jet(xs, (), basis) for tree in self.components])

    def evaluate(self, x: Sequence[float]) -> np.ndarray:
        return np.array([tree.evaluate(x) for tree in self.components])

    def derivatives(self, x: Sequence[float]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """v, J[a, b] = ∂_b v^a и H[a, b, c] = ∂_c ∂_b v^a в точке x"""
        n = self.dimension
        basis = get_basis(n, 2)
        xs = [seed_variable(float(value), i, n, 2) for i, value in enumerate(x)]
        v = self.jets(xs, basis)
        jacobian = v.gradient(range(n))
        return v.value, jacobian.value, jacobian.gradient(range(n)).value

    def scaled(self, factor: float) -> "VectorFieldOnM":
        return VectorFieldOnM(tuple(c.scaled(factor) for c in self.components), name=f"{factor:g}*{self.name}")

    def __add__(self, other: "VectorFieldOnM") -> "VectorFieldOnM":
        if other.dimension != self.dimension:
            raise ArgumentError("Сумма полей разной размерности")
        return VectorFieldOnM(
            tuple(a + b for a, b in zip(self.components, other.components)),
            name=f"{self.name}+{other.name}",
        )

    def describe(self) -> str:
        return f"{self.name}: ({', '.join(c.text or c.pretty() for c in self.components)})"


@dataclass
class CompleteLiftValue:
    """Компоненты X^c в адаптированном репере {δ_i, ∂̇_i}"""
    horizontal: np.ndarray
    vertical: np.ndarray
    sample: TangentSample


@dataclass
class ResidualReport:
    """Невязки группы проверок в одной точке"""
    name: str
    residuals: Dict[str, float] = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values()) if self.residuals else 0.0


class LieCalculus:
    """
    Производные Ли вдоль X^c в окрестности точки. Все величины - джеты
    над (x, y); порядок результата на единицу меньше порядка аргумента.

    Args:
        structure: Финслерова структура
        field: Векторное поле на базе
        sample: Точка (x, y)
        geometry: Уже построенные джеты геометрии (порядка 4) для повторного использования
    """

    def __init__(self, structure: FinslerStructure, field: VectorFieldOnM, sample: TangentSample,
                 geometry: Optional[GeometryJets] = None):
        if field.dimension != structure.dimension:
            raise ArgumentError(
                f"Размерность поля {field.dimension} не совпадает с размерностью структуры {structure.dimension}"
            )
        self.structure = structure
        self.field = field
        self.sample = sample
        self.geometry = geometry or GeometryJets(structure, sample, CURVATURE_ORDER)
        geo = self.geometry
        xs, _, basis = structure.seed(sample, geo.order)
        self.v = field.jets(xs, basis)
        self.dv = self.v.gradient(geo.x_vars)       # [a, b] = ∂_b v^a
        self.ddv = self.dv.gradient(geo.x_vars)     # [a, b, c] = ∂_c ∂_b v^a
        self.w = contract("ab,b->a", self.dv, geo.y_at(self.dv.max_order))  # y^b ∂_b v^a

    # ------------------------------------------------------------------
    # Общий шаблон
    # ------------------------------------------------------------------

    def transport(self, tensor: Jet) -> Jet:
        """X^c(T) = v^a ∂_a T + y^b ∂_b v^a ∂̇_a T покомпонентно"""
        order = tensor.max_order - 1
        dx = tensor.gradient(self.geometry.x_vars).truncate(order)
        dy = tensor.gradient(self.geometry.y_vars).truncate(order)
        return (contract("...a,a->...", dx, self.v.truncate(order))
                + contract("...a,a->...", dy, self.w.truncate(order)))

    def lie(self, tensor: Union[Jet, np.ndarray], variances: Sequence[str]) -> Jet:
        """Тензорная часть производной Ли по сигнатуре вариантностей"""
        if isinstance(tensor, Jet):
            if tensor.ndim != len(variances):
                raise ArgumentError("Число вариантностей не совпадает с рангом тензора")
            result = self.transport(tensor)
            tensor = tensor.truncate(result.max_order)
        else:
            tensor = np.asarray(tensor, dtype=float)
            if tensor.ndim != len(variances):
                raise ArgumentError("Число вариантностей не совпадает с рангом тензора")
            result = Jet.constant(np.zeros(tensor.shape), self.dv.basis)
        dv = self.dv.truncate(result.max_order)

        letters = _AXIS_LETTERS[:len(variances)]
        for position, variance in enumerate(variances):
            contracted = letters[:position] + "m" + letters[position + 1:]
            slot = letters[position]
            if variance == UPPER:
                result = result - contract(f"{contracted},{slot}m->{letters}", tensor, dv)
            elif variance == LOWER:
                result = result + contract(f"{contracted},m{slot}->{letters}", tensor, dv)
            else:
                raise ArgumentError(f"Неизвестная вариантность: {variance}")
        return result

    # ------------------------------------------------------------------
    # Производные Ли геометрических объектов
    # ------------------------------------------------------------------

    @cached_property
    def lie_y(self) -> Jet:
        """£ y^i, тождественно ноль"""
        return self.lie(self.geometry.y_seed, (UPPER,))

    @cached_property
    def lie_g(self) -> Jet:
        """£ g_ij, индексы [i, j]"""
        return self.lie(self.geometry.g, (LOWER, LOWER))

    @cached_property
    def lie_N(self) -> Jet:
        """£ N^h_i = (тензорный шаблон) + y^b ∂_b ∂_i v^h, индексы [h, i]"""
        tensorial = self.lie(self.geometry.N, (UPPER, LOWER))
        order = tensorial.max_order
        inhomogeneous = contract("hib,b->hi", self.ddv.truncate(order), self.geometry.y_at(order))
        return tensorial + inhomogeneous

    @cached_property
    def lie_F(self) -> Jet:
        """
        £ F_i^a_k, индексы [i, a, k]: тензорный шаблон + ∂_i ∂_k v^a
        + C_i^a_m £N^m_k (горизонтальный репер переносится вместе с X^c)
        """
        tensorial = self.lie(self.geometry.F_h, (LOWER, UPPER, LOWER))
        order = tensorial.max_order
        second = self.ddv.truncate(order).transpose(1, 0, 2)
        frame = contract("iam,mk->iak", self.geometry.C_mixed.truncate(order), self.lie_N.truncate(order))
        return tensorial + second + frame

    def complete_lift(self) -> CompleteLiftValue:
        v = self.v.value
        y = np.array(self.sample.y)
        F_h = self.geometry.F_h.value
        vertical = self.dv.value @ y + np.einsum("mij,m,j->i", F_h, v, y)
        return CompleteLiftValue(horizontal=v, vertical=vertical, sample=self.sample)

    def connection_product(self) -> np.ndarray:
        """A_ij = g_ia £N^a_j"""
        return self.geometry.g.value @ self.lie_N.value

    def lift_metric_lie(self, coeffs: LiftCoefficients) -> np.ndarray:
        """£ g̃ блоками: hh = α£g + β(A + Aᵀ), hv = β£g + γAᵀ, vv = γ£g"""
        lie_g = self.lie_g.value
        A = self.connection_product()
        hh = coeffs.alpha * lie_g + coeffs.beta * (A + A.T)
        hv = coeffs.beta * lie_g + coeffs.gamma * A.T
        vv = coeffs.gamma * lie_g
        return lift_blocks(hh, hv, hv.T, vv)

    def form_lie_derivatives(self) -> Dict[str, np.ndarray]:
        """
        Разложения производных Ли трёх квадратичных форм:
            £(g dx dx)      = £g dx dx
            £(2 g dx δy)    = 2 £g dx δy + 2 g_ia £N^a_j dx^i dx^j
            £(g δy δy)      = £g δy δy + 2 g_ia £N^a_j δy^i dx^j
        """
        n = self.geometry.n
        zero = np.zeros((n, n))
        lie_g = self.lie_g.value
        A = self.connection_product()
        return {
            "g1": lift_blocks(lie_g, zero, zero, zero),
            "g2": lift_blocks(A + A.T, lie_g, lie_g, zero),
            "g3": lift_blocks(zero, A.T, A, lie_g),
        }

    def lift_metric_lie_by_forms(self, coeffs: LiftCoefficients) -> np.ndarray:
        forms = self.form_lie_derivatives()
        return coeffs.alpha * forms["g1"] + coeffs.beta * forms["g2"] + coeffs.gamma * forms["g3"]

    def interchange(self) -> np.ndarray:
        """∇_k £g_ij - £∇_k g_ij - g_aj £F_i^a_k - g_ai £F_j^a_k, индексы [i, j, k]"""
        geo = self.geometry
        nabla_lie_g = geo.covariant(self.lie_g, (LOWER, LOWER)).value
        lie_nabla_g = self.lie(geo.covariant(geo.g, (LOWER, LOWER)), (LOWER, LOWER, LOWER)).value
        g = geo.g.value
        lie_F = self.lie_F.value
        return (nabla_lie_g - lie_nabla_g
                - np.einsum("aj,iak->ijk", g, lie_F)
                - np.einsum("ai,jak->ijk", g, lie_F))

    def connection_contraction(self) -> np.ndarray:
        """y^k (g_ai £F_k^a_j + g_aj £F_k^a_i)"""
        y = np.array(self.sample.y)
        g = self.geometry.g.value
        lie_F = self.lie_F.value
        return (np.einsum("k,ai,kaj->ij", y, g, lie_F)
                + np.einsum("k,aj,kai->ij", y, g, lie_F))


# ----------------------------------------------------------------------
# Операции уровня модуля
# ----------------------------------------------------------------------

def complete_lift(structure: FinslerStructure, V: VectorFieldOnM, sample: TangentSample) -> CompleteLiftValue:
    """X^c = v^i δ_i + y^j ∇_j v^i ∂̇_i"""
    return LieCalculus(structure, V, sample).complete_lift()


TensorFunction = Callable[[Sequence[Jet], Sequence[Jet]], Jet]

_NAMED_TENSORS = {
    "y": (lambda geo: geo.y_seed, (UPPER,)),
    "g": (lambda geo: geo.g, (LOWER, LOWER)),
    "g_inv": (lambda geo: geo.g_inv, (UPPER, UPPER)),
    "C": (lambda geo: geo.C, (LOWER, LOWER, LOWER)),
    "G": (lambda geo: geo.spray, (UPPER,)),
    "F2": (lambda geo: geo.L, ()),
}


def lie_derivative_tensor(structure: FinslerStructure, V: VectorFieldOnM, sample: TangentSample,
                          T: Union[str, TensorFunction, TensorValue],
                          variances: Optional[Sequence[str]] = None) -> TensorValue:
    """
    Производная Ли тензорного поля на TM по координатному шаблону.

    Args:
        T: Имя величины ("y", "g", "g_inv", "C", "G", "F2"), функция джетов
           координат (xs, ys) -> джет или TensorValue (с джетом или постоянный)
        variances: Вариантности индексов (для функции и TensorValue без сигнатуры)
    """
    calculus = LieCalculus(structure, V, sample)
    geo = calculus.geometry
    if isinstance(T, str):
        if T not in _NAMED_TENSORS:
            raise ArgumentError(f"Неизвестная величина для производной Ли: {T}")
        getter, default_variances = _NAMED_TENSORS[T]
        source, variances = getter(geo), variances or default_variances
    elif isinstance(T, TensorValue):
        source = T.jet if T.jet is not None else T.data
        variances = variances or T.variances
    else:
        xs, ys, basis = structure.seed(sample, geo.order)
        source = T(xs, ys)
        if not isinstance(source, Jet):
            source = Jet.constant(source, basis)
        variances = variances or (LOWER,) * source.ndim
    result = calculus.lie(source, tuple(variances))
    signature = tuple(upper(f"a{k}") if v == UPPER else lower(f"a{k}") for k, v in enumerate(variances))
    return TensorValue.from_jet(result, signature, name=f"lie({T if isinstance(T, str) else 'T'})")


def lie_derivative_nonlinear_connection(structure: FinslerStructure, V: VectorFieldOnM,
                                        sample: TangentSample) -> TensorValue:
    calculus = LieCalculus(structure, V, sample)
    return TensorValue.from_jet(calculus.lie_N, (upper("h"), lower("i")), name="lie_N")


def lie_derivative_connection(structure: FinslerStructure, V: VectorFieldOnM,
                              sample: TangentSample) -> TensorValue:
    """£ F_i^a_k, хранение [i][a][k]"""
    calculus = LieCalculus(structure, V, sample)
    return TensorValue.from_jet(
        calculus.lie_F, (lower("i"), upper("a"), lower("k", HORIZONTAL)), name="lie_F"
    )


def lie_derivative_lift_metric(structure: FinslerStructure, V: VectorFieldOnM, sample: TangentSample,
                               coeffs: LiftCoefficients) -> TensorValue:
    """£_{X^c} g̃ в адаптированном репере (матрица 2n×2n)"""
    calculus = LieCalculus(structure, V, sample)
    matrix = calculus.lift_metric_lie(coeffs)
    return TensorValue(matrix, (lower("A", "tangent_bundle"), lower("B", "tangent_bundle")), name="lie_lift")


def interchange_residual(structure: FinslerStructure, V: VectorFieldOnM, sample: TangentSample) -> TensorValue:
    calculus = LieCalculus(structure, V, sample)
    return TensorValue(calculus.interchange(), (lower("i"), lower("j"), lower("k", HORIZONTAL)),
                       name="interchange")


# ----------------------------------------------------------------------
# Эталоны: потоки и скобки
# ----------------------------------------------------------------------

def natural_field(V: VectorFieldOnM, sample: TangentSample) -> Tuple[np.ndarray, np.ndarray]:
    """
    Компоненты X^c в натуральных координатах и их якобиан:
    X = (v, J y), DX = [[J, 0], [K, J]], K[a, c] = ∂_c ∂_b v^a y^b.
    """
    v, J, H = V.derivatives(sample.x)
    y = np.array(sample.y)
    n = V.dimension
    K = np.einsum("abc,b->ac", H, y)
    X = np.concatenate([v, J @ y])
    DX = np.block([[J, np.zeros((n, n))], [K, J]])
    return X, DX


def flow_lie_derivative(tensor_fn: Callable[[TangentSample], np.ndarray], V: VectorFieldOnM,
                        sample: TangentSample, covariant_rank: int = 2,
                        step: float = DEFAULT_STEP) -> np.ndarray:
    """
    Производная Ли ковариантного поля (ранга 1 или 2, натуральные координаты)
    как центральная разность обратных образов под шагом Эйлера
    Φ_t(x, y) = (x + t v, y + t (∂v) y).
    """
    X, DX = natural_field(V, sample)
    identity = np.eye(len(X))

    def pulled(t: float) -> np.ndarray:
        moved = sample.shifted(t * X)
        differential = identity + t * DX
        value = np.asarray(tensor_fn(moved), dtype=float)
        if covariant_rank == 1:
            return differential.T @ value
        if covariant_rank == 2:
            return differential.T @ value @ differential
        raise ArgumentError(f"Поддерживаются ранги 1 и 2, получено {covariant_rank}")

    return (pulled(step) - pulled(-step)) / (2 * step)


def natural_lift_metric(structure: FinslerStructure, sample: TangentSample,
                        coeffs: LiftCoefficients) -> np.ndarray:
    geometry = GeometryJets(structure, sample, 3)
    return lift_metric_natural(build_lift_metric(geometry.g.value, coeffs), geometry.N.value)


def _quadratic_residual(flow: np.ndarray, assembled: np.ndarray, vectors: np.ndarray) -> float:
    worst = 0.0
    for w in vectors:
        expected = float(w @ flow @ w)
        actual = float(w @ assembled @ w)
        worst = max(worst, abs(expected - actual) / max(1.0, abs(expected)))
    return worst


def lift_form_lie_check(structure: FinslerStructure, V: VectorFieldOnM, sample: TangentSample,
                        coeffs: Optional[LiftCoefficients] = None, vectors: int = 4, seed: int = 0,
                        step: float = DEFAULT_STEP) -> ResidualReport:
    """
    Сверка собранных производных Ли с разностной производной вдоль потока:
        g1, g2, g3   квадратичные формы на случайных векторах TTM
        dx           £dx^h = ∂_m v^h dx^m
        delta_y      £δy^h = £N^h_m dx^m + ∂_m v^h δy^m
        lift         £g̃ для заданных коэффициентов (если переданы)
    """
    calculus = LieCalculus(structure, V, sample)
    n = structure.dimension
    P = adapted_to_natural(calculus.geometry.N.value)
    rng = np.random.default_rng(seed)
    test_vectors = rng.normal(size=(vectors, 2 * n))
    report = ResidualReport("lift_forms")

    forms = calculus.form_lie_derivatives()
    for name, form_coeffs in FORM_COEFFICIENTS.items():
        flow = flow_lie_derivative(lambda s: natural_lift_metric(structure, s, form_coeffs), V, sample, 2, step)
        report.residuals[name] = _quadratic_residual(flow, P.T @ forms[name] @ P, test_vectors)

    if coeffs is not None:
        flow = flow_lie_derivative(lambda s: natural_lift_metric(structure, s, coeffs), V, sample, 2, step)
        assembled = P.T @ calculus.lift_metric_lie(coeffs) @ P
        report.residuals["lift"] = _quadratic_residual(flow, assembled, test_vectors)

    _, J, _ = V.derivatives(sample.x)
    lie_N = calculus.lie_N.value
    dx_worst = 0.0
    delta_y_worst = 0.0
    for h in range(n):
        unit = np.zeros(2 * n)
        unit[h] = 1.0
        flow_dx = flow_lie_derivative(lambda s: unit, V, sample, 1, step)
        expected_dx = np.concatenate([J[h], np.zeros(n)])
        dx_worst = max(dx_worst, float(np.max(np.abs(flow_dx - expected_dx))) / max(1.0, np.max(np.abs(expected_dx))))

        def delta_y(s: TangentSample, h=h) -> np.ndarray:
            N = GeometryJets(structure, s, 3).N.value
            return np.concatenate([N[h], np.eye(n)[h]])

        flow_dy = flow_lie_derivative(delta_y, V, sample, 1, step)
        expected_dy = P.T @ np.concatenate([lie_N[h], J[h]])
        delta_y_worst = max(delta_y_worst,
                            float(np.max(np.abs(flow_dy - expected_dy))) / max(1.0, np.max(np.abs(expected_dy))))
    report.residuals["dx"] = dx_worst
    report.residuals["delta_y"] = delta_y_worst
    return report


def probe_functions(dimension: int) -> Tuple[ExprTree, ...]:
    """Гладкие пробные функции на TM для проверки скобок"""
    first = " + ".join(
        f"sin(x{i}) * y{i}^2 + x{i % dimension + 1} * y{i} * y{i % dimension + 1}"
        for i in range(1, dimension + 1)
    )
    second = " + ".join(f"exp(0.3 * x{i}) * y{i}" for i in range(1, dimension + 1)) + f" + cos(x1 + y{dimension})"
    return parse_expression(first, dimension), parse_expression(second, dimension)


def _first_derivatives(structure: FinslerStructure, tree: ExprTree,
                       sample: TangentSample) -> Tuple[np.ndarray, np.ndarray]:
    xs, ys, basis = structure.seed(sample, 1)
    jet = tree.evaluate_jet(xs, ys, basis)
    n = structure.dimension
    return jet.gradient(range(n)).value, jet.gradient(range(n, 2 * n)).value


def _relative_gap(lhs: np.ndarray, rhs: np.ndarray) -> float:
    return float(np.max(np.abs(lhs - rhs))) / max(1.0, float(np.max(np.abs(lhs))))


def bracket_check(structure: FinslerStructure, sample: TangentSample,
                  step: float = DEFAULT_STEP) -> ResidualReport:
    """
    Скобки адаптированного репера на пробных функциях:
        horizontal_horizontal  [δ_i, δ_j] = R^h_ij ∂̇_h
        horizontal_vertical    [δ_i, ∂̇_j] = ∂̇_j N^h_i ∂̇_h
        vertical_vertical      [∂̇_i, ∂̇_j] = 0
    Внешняя производная берётся разностями, внутренняя - точно.
    """
    n = structure.dimension
    geometry = GeometryJets(structure, sample, CURVATURE_ORDER)
    N0 = geometry.N.value
    R_h = geometry.R_h.value
    dot_N = geometry.N.gradient(geometry.y_vars).value  # [h, i, j] = ∂̇_j N^h_i
    y_vars = range(n, 2 * n)

    report = ResidualReport("brackets", {
        "horizontal_horizontal": 0.0, "horizontal_vertical": 0.0, "vertical_vertical": 0.0,
    })
    for tree in probe_functions(n):
        def psi(s: TangentSample) -> np.ndarray:
            dx, dy = _first_derivatives(structure, tree, s)
            N = GeometryJets(structure, s, 3).N.value
            return dx - N.T @ dy

        def chi(s: TangentSample) -> np.ndarray:
            return _first_derivatives(structure, tree, s)[1]

        chi0 = chi(sample)
        delta_psi = fd_delta(psi, sample, N0, step)     # [j, i] = δ_i δ_j φ
        delta_chi = fd_delta(chi, sample, N0, step)     # [j, i] = δ_i ∂̇_j φ
        vertical_psi = fd_gradient(psi, sample, y_vars, step)  # [i, j] = ∂̇_j δ_i φ
        vertical_chi = fd_gradient(chi, sample, y_vars, step)  # [j, i] = ∂̇_i ∂̇_j φ

        hh = _relative_gap(delta_psi.T - delta_psi, np.einsum("hij,h->ij", R_h, chi0))
        hv = _relative_gap(delta_chi.T - vertical_psi, np.einsum("hij,h->ij", dot_N, chi0))
        vv = _relative_gap(vertical_chi.T - vertical_chi, np.zeros((n, n)))
        report.residuals["horizontal_horizontal"] = max(report.residuals["horizontal_horizontal"], hh)
        report.residuals["horizontal_vertical"] = max(report.residuals["horizontal_vertical"], hv)
        report.residuals["vertical_vertical"] = max(report.residuals["vertical_vertical"], vv)
    logger.debug(f"Скобки репера в точке x={sample.x}, y={sample.y}: {report.residuals}")
    return report


def nonlinear_connection_bracket_residual(structure: FinslerStructure, V: VectorFieldOnM,
                                          sample: TangentSample, step: float = DEFAULT_STEP) -> float:
    """
    Сверка £N со скобкой [X^c, δ_i] = -∂_i v^h δ_h - £N^h_i ∂̇_h на пробных функциях.
    """
    calculus = LieCalculus(structure, V, sample)
    lie_N = calculus.lie_N.value
    N0 = calculus.geometry.N.value
    X, _ = natural_field(V, sample)
    _, J, _ = V.derivatives(sample.x)

    worst = 0.0
    for tree in probe_functions(structure.dimension):
        def psi(s: TangentSample) -> np.ndarray:
            dx, dy = _first_derivatives(structure, tree, s)
            return dx - GeometryJets(structure, s, 3).N.value.T @ dy

        def lifted(s: TangentSample) -> np.ndarray:
            dx, dy = _first_derivatives(structure, tree, s)
            Xs, _ = natural_field(V, s)
            return np.array(Xs @ np.concatenate([dx, dy]))

        psi0 = psi(sample)
        _, chi0 = _first_derivatives(structure, tree, sample)
        along = (psi(sample.shifted(step * X)) - psi(sample.shifted(-step * X))) / (2 * step)
        across = fd_delta(lifted, sample, N0, step)
        lhs = along - across
        rhs = -J.T @ psi0 - lie_N.T @ chi0
        worst = max(worst, _relative_gap(lhs, rhs))
    return worst
