"""
Тензоры финслеровой структуры в точке (x, y): фундаментальный тензор,
тензор Картана, спрей, нелинейная связность, связность Картана,
ковариантные производные и кривизна.

Все величины строятся как джеты по 2n переменным (x, y) в окрестности точки,
поэтому δ-производные производных тензоров (например, δ_i F_k^h_j в кривизне)
точны и не требуют численного дифференцирования.

Соглашение о хранении индексов:
    g[i, j]         g_ij
    C[i, j, k]      C_ijk = ½ ∂̇_k g_ij
    C_mixed[i,h,j]  C_i^h_j = g^hm C_imj
    G[i]            G^i
    N[h, i]         N^h_i = ∂̇_i G^h
    F_h[i, h, j]    F_i^h_j
    delta_g[i,j,k]  δ_k g_ij
    R_h[h, i, j]    R^h_ij = δ_j N^h_i - δ_i N^h_j
    R_k[k, h, j, i] R_k^h_ji
Производная по направлению всегда добавляет индекс последним.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from errors import ArgumentError, SingularMetricError
from finsler_structure import FinslerStructure, TangentSample
from jet_arithmetic import Jet, contract, seed_vector
from logger import get_logger

logger = get_logger(__name__)

UPPER = "upper"
LOWER = "lower"
HORIZONTAL = "horizontal"
VERTICAL = "vertical"
BASE = "base"

CURVATURE_ORDER = 4
CONDITION_LIMIT = 1e12

_AXIS_LETTERS = "abcdefgh"


@dataclass(frozen=True)
class IndexSlot:
    """Описание индекса тензора"""
    name: str
    variance: str
    block: str = BASE


def lower(name: str, block: str = BASE) -> IndexSlot:
    return IndexSlot(name, LOWER, block)


def upper(name: str, block: str = BASE) -> IndexSlot:
    return IndexSlot(name, UPPER, block)


@dataclass
class TensorValue:
    """
    Числовой тензор с сигнатурой индексов. Если известен джет, он хранится
    вместе со значением и используется для дальнейшего дифференцирования;
    без джета тензор считается постоянным полем.
    """
    data: np.ndarray
    signature: Tuple[IndexSlot, ...]
    jet: Optional[Jet] = field(default=None, repr=False, compare=False)
    name: str = ""

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        self.signature = tuple(self.signature)
        if len(self.signature) != self.data.ndim:
            raise ArgumentError(
                f"Длина сигнатуры {len(self.signature)} не равна рангу {self.data.ndim} тензора {self.name}"
            )
        if self.jet is not None and self.jet.shape != self.data.shape:
            raise ArgumentError(f"Форма джета {self.jet.shape} не совпадает с формой данных {self.data.shape}")

    @classmethod
    def from_jet(cls, jet: Jet, signature: Sequence[IndexSlot], name: str = "") -> "TensorValue":
        return cls(data=jet.value, signature=tuple(signature), jet=jet, name=name)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def rank(self) -> int:
        return self.data.ndim

    @property
    def variances(self) -> Tuple[str, ...]:
        return tuple(slot.variance for slot in self.signature)


@dataclass
class ConnectionBundle:
    """Связность Картана в точке и всё, из чего она собрана"""
    g: TensorValue
    g_inv: TensorValue
    C: TensorValue
    C_mixed: TensorValue
    spray: TensorValue
    N: TensorValue
    F_h: TensorValue
    sample: TangentSample
    geometry: "GeometryJets" = field(repr=False)


@dataclass
class CurvatureValue:
    """hh-кривизна R_k^h_ji и тензор R^h_ij"""
    R_k: TensorValue
    R_h: TensorValue


@dataclass
class TensorSnapshot:
    """Все числовые тензоры в одной точке (режим jet или finite_difference)"""
    mode: str
    sample: TangentSample
    g: np.ndarray
    g_inv: np.ndarray
    C: np.ndarray
    C_mixed: np.ndarray
    G: np.ndarray
    N: np.ndarray
    F_h: np.ndarray
    delta_g: np.ndarray
    dot_g: np.ndarray
    delta_F: np.ndarray
    R_h: np.ndarray
    R_k: np.ndarray

    TENSOR_NAMES = ("g", "g_inv", "C", "C_mixed", "G", "N", "F_h",
                    "delta_g", "dot_g", "delta_F", "R_h", "R_k")

    def tensors(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in self.TENSOR_NAMES}


class GeometryJets:
    """
    Джеты геометрических величин в окрестности точки.

    Порядок order относится к джету F^2; каждое дифференцирование понижает его
    на единицу: g имеет порядок order-2, связность order-3, кривизна order-4.
    Величины вычисляются лениво и кэшируются.

    Args:
        structure: Финслерова структура
        sample: Точка (x, y)
        order: Порядок джета F^2 (от 2 до 4)
    """

    def __init__(self, structure: FinslerStructure, sample: TangentSample, order: int = CURVATURE_ORDER):
        if not 2 <= order <= CURVATURE_ORDER:
            raise ArgumentError(f"Порядок геометрических джетов вне диапазона [2, 4]: {order}")
        self.structure = structure
        self.sample = sample
        self.order = order
        self.n = structure.dimension
        self.x_vars = tuple(range(self.n))
        self.y_vars = tuple(range(self.n, 2 * self.n))
        self.L = structure.squared_jet(sample, order)
        self.y_seed = seed_vector(sample.y, self.n, 2 * self.n, order)

    def _require(self, minimum: int, what: str) -> None:
        if self.order < minimum:
            raise ArgumentError(f"Для {what} нужен порядок F^2 не ниже {minimum}, задан {self.order}")

    def y_at(self, order: int) -> Jet:
        """Джет координат y нужного порядка"""
        return self.y_seed.truncate(order)

    # ------------------------------------------------------------------
    # Метрика и её производные
    # ------------------------------------------------------------------

    @cached_property
    def g(self) -> Jet:
        return 0.5 * self.L.gradient(self.y_vars).gradient(self.y_vars)

    @cached_property
    def g_inv(self) -> Jet:
        g0 = self.g.value
        condition = np.linalg.cond(g0)
        if not np.isfinite(condition) or condition > CONDITION_LIMIT:
            raise SingularMetricError(
                f"Фундаментальный тензор вырожден (число обусловленности {condition:.3e})",
                sample=self.sample,
            )
        inverse0 = np.linalg.inv(g0)
        # (g0 + E)^-1 = Σ (-g0^-1 E)^k g0^-1; у E нет свободного члена
        increment = self.g - g0
        term = Jet.constant(inverse0, self.g.basis)
        result = term
        for _ in range(self.g.max_order):
            term = -contract("ab,bc->ac", inverse0, contract("ab,bc->ac", increment, term))
            result = result + term
        return result

    @cached_property
    def dot_g(self) -> Jet:
        """∂̇_k g_ij"""
        self._require(3, "вертикальной производной g")
        return self.g.gradient(self.y_vars)

    @cached_property
    def C(self) -> Jet:
        return 0.5 * self.dot_g

    @cached_property
    def C_mixed(self) -> Jet:
        g_inv = self.g_inv.truncate(self.C.max_order)
        return contract("hm,imj->ihj", g_inv, self.C)

    # ------------------------------------------------------------------
    # Спрей и нелинейная связность
    # ------------------------------------------------------------------

    @cached_property
    def spray(self) -> Jet:
        """G^i = ¼ g^il (y^k ∂_k ∂̇_l F² - ∂_l F²)"""
        order = self.order - 2
        mixed = self.L.gradient(self.y_vars).gradient(self.x_vars)  # [l, k] = ∂_k ∂̇_l F²
        transport = contract("lk,k->l", mixed, self.y_at(order))
        term = transport - self.L.gradient(self.x_vars).truncate(order)
        return 0.25 * contract("il,l->i", self.g_inv, term)

    @cached_property
    def N(self) -> Jet:
        self._require(3, "нелинейной связности")
        return self.spray.gradient(self.y_vars)

    def delta(self, tensor: Jet) -> Jet:
        """δ_c T = ∂_c T - N^m_c ∂̇_m T; индекс c добавляется последним"""
        if tensor.max_order == 0:
            raise ArgumentError("δ-производная джета порядка 0 невозможна")
        order = min(tensor.max_order - 1, self.N.max_order)
        dx = tensor.gradient(self.x_vars).truncate(order)
        dy = tensor.gradient(self.y_vars).truncate(order)
        return dx - contract("...m,mc->...c", dy, self.N.truncate(order))

    def vertical(self, tensor: Jet) -> Jet:
        """∂̇_c T; индекс c добавляется последним"""
        return tensor.gradient(self.y_vars)

    # ------------------------------------------------------------------
    # Связность Картана и кривизна
    # ------------------------------------------------------------------

    @cached_property
    def delta_g(self) -> Jet:
        """δ_k g_ij, индексы [i, j, k]"""
        return self.delta(self.g)

    @cached_property
    def F_h(self) -> Jet:
        """F_i^h_j = ½ g^hm (δ_i g_mj + δ_j g_im - δ_m g_ij)"""
        D = self.delta_g
        lowered = 0.5 * (D.transpose(2, 0, 1) + D - D.transpose(0, 2, 1))  # [i, m, j]
        return contract("hm,imj->ihj", self.g_inv.truncate(D.max_order), lowered)

    @cached_property
    def delta_N(self) -> Jet:
        """δ_j N^h_i, индексы [h, i, j]"""
        return self.delta(self.N)

    @cached_property
    def R_h(self) -> Jet:
        DN = self.delta_N
        return DN - DN.transpose(0, 2, 1)

    @cached_property
    def delta_F(self) -> Jet:
        """δ_i F_k^h_j, индексы [k, h, j, i]"""
        self._require(CURVATURE_ORDER, "производных связности")
        return self.delta(self.F_h)

    @cached_property
    def R_k(self) -> Jet:
        """
        R_k^h_ji = δ_i F_k^h_j - δ_j F_k^h_i + F_k^m_j F_m^h_i - F_k^m_i F_m^h_j
                   + C_k^h_m R^m_ji
        """
        DF = self.delta_F
        order = DF.max_order
        F = self.F_h.truncate(order)
        C_mixed = self.C_mixed.truncate(order)
        R_h = self.R_h.truncate(order)
        return (
            DF - DF.transpose(0, 1, 3, 2)
            + contract("kmj,mhi->khji", F, F)
            - contract("kmi,mhj->khji", F, F)
            + contract("khm,mji->khji", C_mixed, R_h)
        )

    # ------------------------------------------------------------------
    # Ковариантные производные
    # ------------------------------------------------------------------

    def covariant(self, tensor: Union[Jet, np.ndarray], variances: Sequence[str],
                  vertical: bool = False) -> Jet:
        """
        h- или v-ковариантная производная тензора по сигнатуре вариантностей.
        Для верхнего индекса h добавляется T^..m.. Γ_m^h_j, для нижнего k
        вычитается T_..m.. Γ_k^m_j, где Γ = F_h (горизонтальная) или C_mixed (вертикальная).
        Числовой массив считается постоянным полем.
        """
        connection = self.C_mixed if vertical else self.F_h
        if len(variances) != np.ndim(tensor.value if isinstance(tensor, Jet) else tensor):
            raise ArgumentError("Число вариантностей не совпадает с рангом тензора")

        if isinstance(tensor, Jet):
            derivative = self.vertical(tensor) if vertical else self.delta(tensor)
            order = min(derivative.max_order, connection.max_order)
            result = derivative.truncate(order)
            tensor = tensor.truncate(order)
        else:
            tensor = np.asarray(tensor, dtype=float)
            order = connection.max_order
            result = Jet.constant(np.zeros(tensor.shape + (self.n,)), connection.basis)
        connection = connection.truncate(order)

        rank = len(variances)
        letters = _AXIS_LETTERS[:rank]
        for position, variance in enumerate(variances):
            contracted = letters[:position] + "m" + letters[position + 1:]
            slot = letters[position]
            if variance == UPPER:
                result = result + contract(f"{contracted},m{slot}j->{letters}j", tensor, connection)
            elif variance == LOWER:
                result = result - contract(f"{contracted},{slot}mj->{letters}j", tensor, connection)
            else:
                raise ArgumentError(f"Неизвестная вариантность: {variance}")
        return result

    def snapshot(self) -> TensorSnapshot:
        self._require(CURVATURE_ORDER, "полного набора тензоров")
        return TensorSnapshot(
            mode="jet",
            sample=self.sample,
            g=self.g.value,
            g_inv=self.g_inv.value,
            C=self.C.value,
            C_mixed=self.C_mixed.value,
            G=self.spray.value,
            N=self.N.value,
            F_h=self.F_h.value,
            delta_g=self.delta_g.value,
            dot_g=self.dot_g.value,
            delta_F=self.delta_F.value,
            R_h=self.R_h.value,
            R_k=self.R_k.value,
        )


# ----------------------------------------------------------------------
# Операции уровня модуля
# ----------------------------------------------------------------------

def fundamental_tensor(structure: FinslerStructure, sample: TangentSample) -> TensorValue:
    """g_ij = ½ ∂̇_i ∂̇_j F²"""
    geometry = GeometryJets(structure, sample, order=2)
    return TensorValue.from_jet(geometry.g, (lower("i"), lower("j")), name="g")


def cartan_tensor(structure: FinslerStructure, sample: TangentSample) -> TensorValue:
    """C_ijk = ½ ∂̇_k g_ij"""
    geometry = GeometryJets(structure, sample, order=3)
    return TensorValue.from_jet(geometry.C, (lower("i"), lower("j"), lower("k", VERTICAL)), name="C")


def spray_coefficients(structure: FinslerStructure, sample: TangentSample) -> TensorValue:
    """
    Коэффициенты геодезического спрея G^i.

    Raises:
        SingularMetricError: g вырожден в точке
    """
    geometry = GeometryJets(structure, sample, order=2)
    return TensorValue.from_jet(geometry.spray, (upper("i"),), name="G")


def nonlinear_connection(structure: FinslerStructure, sample: TangentSample) -> TensorValue:
    """N^h_i = ∂̇_i G^h"""
    geometry = GeometryJets(structure, sample, order=3)
    return TensorValue.from_jet(geometry.N, (upper("h"), lower("i")), name="N")


QuantityFunction = Callable[[Sequence[Jet], Sequence[Jet]], Union[Jet, float]]


def delta_derivative(structure: FinslerStructure, sample: TangentSample,
                     f: Union[str, QuantityFunction], order: int = 3) -> TensorValue:
    """
    δ_i f = ∂_i f - N^m_i ∂̇_m f; новый нижний горизонтальный индекс идёт первым.

    Args:
        f: Имя величины ("F", "F2", "g", "C", "G", "N") или функция,
           принимающая джеты координат (xs, ys) и возвращающая джет
        order: Порядок джета F^2 (при f = "g" нужен хотя бы 3)
    """
    geometry = GeometryJets(structure, sample, order)
    jet = _quantity(geometry, f)
    derived = geometry.delta(jet)
    moved = derived.moveaxis(derived.ndim - 1, 0)
    signature = (lower("i", HORIZONTAL),) + tuple(lower(f"a{k}") for k in range(jet.ndim))
    return TensorValue.from_jet(moved, signature, name=f"delta({f if isinstance(f, str) else 'f'})")


def _quantity(geometry: GeometryJets, f: Union[str, QuantityFunction]) -> Jet:
    if callable(f):
        xs, ys, basis = geometry.structure.seed(geometry.sample, geometry.order)
        result = f(xs, ys)
        return result if isinstance(result, Jet) else Jet.constant(result, basis)
    named = {
        "F2": lambda: geometry.L,
        "F": lambda: geometry.L.sqrt(),
        "g": lambda: geometry.g,
        "C": lambda: geometry.C,
        "G": lambda: geometry.spray,
        "N": lambda: geometry.N,
    }
    if f not in named:
        raise ArgumentError(f"Неизвестная величина для δ-производной: {f}")
    return named[f]()


def cartan_connection(structure: FinslerStructure, sample: TangentSample,
                      order: int = CURVATURE_ORDER) -> ConnectionBundle:
    """
    Связность Картана в точке.

    Args:
        order: Порядок джета F^2; 3 достаточно для значений, 4 нужен для
               ковариантных производных от производных метрики

    Raises:
        SingularMetricError: g вырожден в точке
    """
    geometry = GeometryJets(structure, sample, max(order, 3))
    bundle = ConnectionBundle(
        g=TensorValue.from_jet(geometry.g, (lower("i"), lower("j")), name="g"),
        g_inv=TensorValue.from_jet(geometry.g_inv, (upper("i"), upper("j")), name="g_inv"),
        C=TensorValue.from_jet(geometry.C, (lower("i"), lower("j"), lower("k", VERTICAL)), name="C"),
        C_mixed=TensorValue.from_jet(geometry.C_mixed, (lower("i"), upper("h"), lower("j", VERTICAL)), name="C_mixed"),
        spray=TensorValue.from_jet(geometry.spray, (upper("i"),), name="G"),
        N=TensorValue.from_jet(geometry.N, (upper("h"), lower("i")), name="N"),
        F_h=TensorValue.from_jet(geometry.F_h, (lower("i"), upper("h"), lower("j", HORIZONTAL)), name="F_h"),
        sample=sample,
        geometry=geometry,
    )
    logger.debug(f"Связность Картана вычислена в точке x={sample.x}, y={sample.y}")
    return bundle


def _covariant_value(bundle: ConnectionBundle, T: TensorValue, vertical: bool) -> TensorValue:
    source = T.jet if T.jet is not None else T.data
    if T.jet is not None and T.jet.basis.num_vars != 2 * bundle.geometry.n:
        raise ArgumentError("Джет тензора построен не над переменными (x, y) этой точки")
    jet = bundle.geometry.covariant(source, T.variances, vertical=vertical)
    block = VERTICAL if vertical else HORIZONTAL
    suffix = "v" if vertical else "h"
    return TensorValue.from_jet(jet, T.signature + (lower("d", block),), name=f"nabla_{suffix}({T.name})")


def h_covariant_derivative(bundle: ConnectionBundle, T: TensorValue) -> TensorValue:
    """
    Горизонтальная ковариантная производная Картана ∇_j T; индекс j добавляется последним.
    Сигнатура T может быть любой; для типа [lower, upper, lower] получается
    ∇_j T_k^h_i = δ_j T_k^h_i + T_k^m_i F_m^h_j - T_m^h_i F_k^m_j - T_k^h_m F_i^m_j.

    Raises:
        ArgumentError: форма T не согласована с размерностью
    """
    _check_shape(bundle, T)
    return _covariant_value(bundle, T, vertical=False)


def v_covariant_derivative(bundle: ConnectionBundle, T: TensorValue) -> TensorValue:
    """Вертикальная ковариантная производная ∇_j̄ T с ∂̇ и C_i^h_j"""
    _check_shape(bundle, T)
    return _covariant_value(bundle, T, vertical=True)


def _check_shape(bundle: ConnectionBundle, T: TensorValue) -> None:
    n = bundle.geometry.n
    if any(size != n for size in T.shape):
        raise ArgumentError(f"Форма тензора {T.shape} не согласована с размерностью {n}")


def hh_curvature(structure: FinslerStructure, sample: TangentSample) -> CurvatureValue:
    """hh-кривизна R_k^h_ji (хранение [k][h][j][i]) и R^h_ij"""
    geometry = GeometryJets(structure, sample, CURVATURE_ORDER)
    return CurvatureValue(
        R_k=TensorValue.from_jet(
            geometry.R_k, (lower("k"), upper("h"), lower("j"), lower("i")), name="R_k"
        ),
        R_h=TensorValue.from_jet(geometry.R_h, (upper("h"), lower("i"), lower("j")), name="R_h"),
    )


def snapshot(structure: FinslerStructure, sample: TangentSample) -> TensorSnapshot:
    """Все тензоры в точке, вычисленные через джеты"""
    return GeometryJets(structure, sample, CURVATURE_ORDER).snapshot()


# ----------------------------------------------------------------------
# Невязки тождеств
# ----------------------------------------------------------------------

def _relative(value: np.ndarray, scale: float) -> float:
    return float(np.max(np.abs(value))) / max(1.0, scale) if np.size(value) else 0.0


def snapshot_identities(snap: TensorSnapshot) -> Dict[str, float]:
    """
    Невязки тождеств по снимку тензоров (годится для обоих режимов):
        g_symmetry              g_ij = g_ji
        inverse                 g g^-1 = I
        cartan_symmetry         полная симметрия C_ijk
        y_cartan                y^m C_mij = 0
        deflection              y^m F_m^h_i = N^h_i
        torsion                 F_i^h_j = F_j^h_i
        h_metricity             δ_k g_ij - g_mj F_i^m_k - g_im F_j^m_k = 0
        v_metricity             ∂̇_k g_ij - g_mj C_i^m_k - g_im C_j^m_k = 0
        curvature_contraction   y^m R_m^h_ij = R^h_ij
        curvature_antisymmetry  R^h_ij = -R^h_ji
    Каждая невязка отнесена к max(1, масштаб величины).
    """
    g, C, N, F_h, R_h = snap.g, snap.C, snap.N, snap.F_h, snap.R_h
    y = np.array(snap.sample.y)
    n = g.shape[0]
    g_scale = float(np.max(np.abs(g)))
    n_scale = float(np.max(np.abs(N)))
    r_scale = float(np.max(np.abs(R_h)))

    h_metric = (snap.delta_g
                - np.einsum("mj,imk->ijk", g, F_h)
                - np.einsum("im,jmk->ijk", g, F_h))
    v_metric = (snap.dot_g
                - np.einsum("mj,imk->ijk", g, snap.C_mixed)
                - np.einsum("im,jmk->ijk", g, snap.C_mixed))

    return {
        "g_symmetry": _relative(g - g.T, g_scale),
        "inverse": float(np.max(np.abs(g @ snap.g_inv - np.eye(n)))),
        "cartan_symmetry": max(
            _relative(C - C.transpose(1, 0, 2), g_scale),
            _relative(C - C.transpose(0, 2, 1), g_scale),
        ),
        "y_cartan": _relative(np.einsum("m,mij->ij", y, C), g_scale),
        "deflection": _relative(np.einsum("m,mhi->hi", y, F_h) - N, n_scale),
        "torsion": _relative(F_h - F_h.transpose(2, 1, 0), n_scale),
        "h_metricity": _relative(h_metric, g_scale),
        "v_metricity": _relative(v_metric, g_scale),
        "curvature_contraction": _relative(np.einsum("m,mhij->hij", y, snap.R_k) - R_h, r_scale),
        "curvature_antisymmetry": _relative(R_h + R_h.transpose(0, 2, 1), r_scale),
    }


def jet_identities(geometry: GeometryJets) -> Dict[str, float]:
    """
    Тождества, которые проверяются только через джеты:
        h_metricity_jet   ∇_k g_ij = 0 через общую ковариантную производную
        v_metricity_jet   ∇_k̄ g_ij = 0
        horizontal_F      δ_i F = 0
        spray_homogeneity y^k ∂̇_k G^i = 2 G^i
    """
    y = np.array(geometry.sample.y)
    g_scale = float(np.max(np.abs(geometry.g.value)))
    F = geometry.L.sqrt()
    G = geometry.spray
    spray_homogeneity = np.einsum("k,ik->i", y, G.gradient(geometry.y_vars).value) - 2 * G.value
    return {
        "h_metricity_jet": _relative(geometry.covariant(geometry.g, (LOWER, LOWER)).value, g_scale),
        "v_metricity_jet": _relative(
            geometry.covariant(geometry.g, (LOWER, LOWER), vertical=True).value, g_scale
        ),
        "horizontal_F": _relative(geometry.delta(F).value, float(abs(F.value))),
        "spray_homogeneity": _relative(spray_homogeneity, float(np.max(np.abs(G.value)))),
    }
