"""
Арифметика джетов - усечённых многомерных рядов Тейлора.

Джет хранит коэффициенты Тейлора всех мономов степени не выше max_order
по num_vars переменным. Мономы нумеруются мульти-индексами - отсортированными
кортежами номеров переменных, (0, 0, 3) означает v0^2 * v3. Базис градуирован:
сначала степень 0, затем 1 и т.д., поэтому базис меньшего порядка является
префиксом базиса большего порядка.

Джет может быть тензорным: коэффициенты имеют форму shape + (M,), где M - размер
базиса. Все операции над тензорными джетами поэлементные, свёртки выполняет
contract().
"""
import itertools
import math
from collections import Counter
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from errors import ArgumentError, DomainError
from logger import get_logger

logger = get_logger(__name__)

MAX_ORDER = 4

MultiIndex = Tuple[int, ...]
Operand = Union["Jet", float, int, np.ndarray]

UNARY_OPS = ("sqrt", "pow_int", "sin", "cos", "exp", "log")
BINARY_OPS = ("add", "sub", "mul", "div")


def _factorial_weight(monomial: MultiIndex) -> float:
    """∏ k_i! по кратностям переменных в мономе"""
    weight = 1
    for count in Counter(monomial).values():
        weight *= math.factorial(count)
    return float(weight)


class ProductTable:
    """Пары мономов (p, q), дающие моном k, отсортированные по k"""

    def __init__(self, left: np.ndarray, right: np.ndarray, starts: np.ndarray):
        self.left = left
        self.right = right
        self.starts = starts


class JetBasis:
    """
    Градуированный базис мономов для заданного числа переменных и порядка.

    Экземпляры кэшируются через get_basis(), поэтому джеты одного пространства
    разделяют таблицы умножения и дифференцирования.
    """

    def __init__(self, num_vars: int, max_order: int):
        self.num_vars = num_vars
        self.max_order = max_order

        monomials: List[MultiIndex] = []
        # offsets[d] - число мономов степени не выше d
        self.offsets: List[int] = []
        for degree in range(max_order + 1):
            monomials.extend(itertools.combinations_with_replacement(range(num_vars), degree))
            self.offsets.append(len(monomials))

        self.monomials: Tuple[MultiIndex, ...] = tuple(monomials)
        self.index: Dict[MultiIndex, int] = {m: i for i, m in enumerate(self.monomials)}
        self.size = len(self.monomials)
        self.degrees = np.array([len(m) for m in self.monomials], dtype=int)
        self.factorials = np.array([_factorial_weight(m) for m in self.monomials])

        self._product: Optional[ProductTable] = None
        self._derivative: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}

    def __repr__(self) -> str:
        return f"JetBasis(num_vars={self.num_vars}, max_order={self.max_order}, size={self.size})"

    @property
    def product(self) -> ProductTable:
        """Таблица усечённого произведения (строится при первом обращении)"""
        if self._product is None:
            left, right, target = [], [], []
            for p, mono_p in enumerate(self.monomials):
                limit = self.offsets[self.max_order - len(mono_p)]
                for q in range(limit):
                    left.append(p)
                    right.append(q)
                    target.append(self.index[tuple(sorted(mono_p + self.monomials[q]))])
            order = np.argsort(np.asarray(target), kind="stable")
            target_sorted = np.asarray(target)[order]
            starts = np.searchsorted(target_sorted, np.arange(self.size))
            self._product = ProductTable(
                left=np.asarray(left)[order],
                right=np.asarray(right)[order],
                starts=starts,
            )
            logger.debug(f"Построена таблица умножения {self!r}: {len(left)} пар")
        return self._product

    def derivative_table(self, var: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Индексы и множители для ∂/∂v_var: коэффициент монома β в производной
        равен (β_var + 1) * c[β + e_var].
        """
        if var not in self._derivative:
            lower = get_basis(self.num_vars, self.max_order - 1)
            source = np.empty(lower.size, dtype=int)
            factor = np.empty(lower.size)
            for i, beta in enumerate(lower.monomials):
                alpha = tuple(sorted(beta + (var,)))
                source[i] = self.index[alpha]
                factor[i] = alpha.count(var)
            self._derivative[var] = (source, factor)
        return self._derivative[var]


@lru_cache(maxsize=None)
def get_basis(num_vars: int, max_order: int) -> JetBasis:
    """Возвращает кэшированный базис"""
    if num_vars < 1:
        raise ArgumentError(f"Число переменных должно быть положительным: {num_vars}")
    if not 0 <= max_order <= MAX_ORDER:
        raise ArgumentError(f"Порядок джета вне диапазона [0, {MAX_ORDER}]: {max_order}")
    return JetBasis(num_vars, max_order)


class Jet:
    """
    Джет (возможно тензорный). Неизменяем после создания.

    Args:
        basis: Базис мономов
        coeffs: Коэффициенты Тейлора формы shape + (basis.size,)
    """

    __slots__ = ("basis", "coeffs")
    # numpy должен уступать нашим отражённым операторам
    __array_ufunc__ = None

    def __init__(self, basis: JetBasis, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim == 0 or coeffs.shape[-1] != basis.size:
            raise ArgumentError(
                f"Форма коэффициентов {coeffs.shape} не согласована с базисом размера {basis.size}"
            )
        coeffs.setflags(write=False)
        self.basis = basis
        self.coeffs = coeffs

    # ------------------------------------------------------------------
    # Конструкторы
    # ------------------------------------------------------------------

    @classmethod
    def constant(cls, value, basis: JetBasis) -> "Jet":
        """Джет постоянной функции (скалярной или тензорной)"""
        value = np.asarray(value, dtype=float)
        coeffs = np.zeros(value.shape + (basis.size,))
        coeffs[..., 0] = value
        return cls(basis, coeffs)

    @classmethod
    def stack(cls, jets: Sequence["Jet"], axis: int = 0) -> "Jet":
        """Объединяет джеты одного базиса в тензорный джет по новой оси"""
        if not jets:
            raise ArgumentError("Нельзя объединить пустой список джетов")
        basis = jets[0].basis
        for jet in jets[1:]:
            _check_same_basis(jets[0], jet)
        if not 0 <= axis <= jets[0].ndim:
            raise ArgumentError(f"Недопустимая ось объединения: {axis}")
        return cls(basis, np.stack([j.coeffs for j in jets], axis=axis))

    # ------------------------------------------------------------------
    # Свойства
    # ------------------------------------------------------------------

    @property
    def num_vars(self) -> int:
        return self.basis.num_vars

    @property
    def max_order(self) -> int:
        return self.basis.max_order

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def ndim(self) -> int:
        return self.coeffs.ndim - 1

    @property
    def value(self) -> np.ndarray:
        """Значение функции (коэффициент степени 0)"""
        return np.array(self.coeffs[..., 0])

    @property
    def coefficients(self) -> Dict[MultiIndex, np.ndarray]:
        """Отображение мульти-индекс -> коэффициент Тейлора"""
        return {m: self.coeffs[..., i] for i, m in enumerate(self.basis.monomials)}

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, num_vars={self.num_vars}, max_order={self.max_order})"

    # ------------------------------------------------------------------
    # Арифметика
    # ------------------------------------------------------------------

    def _wrap(self, coeffs: np.ndarray) -> "Jet":
        return Jet(self.basis, coeffs)

    def _as_jet(self, other: Operand) -> "Jet":
        if isinstance(other, Jet):
            _check_same_basis(self, other)
            return other
        return Jet.constant(other, self.basis)

    def __add__(self, other: Operand) -> "Jet":
        other = self._as_jet(other)
        return self._wrap(self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other: Operand) -> "Jet":
        other = self._as_jet(other)
        return self._wrap(self.coeffs - other.coeffs)

    def __rsub__(self, other: Operand) -> "Jet":
        return self._as_jet(other) - self

    def __neg__(self) -> "Jet":
        return self._wrap(-self.coeffs)

    def __mul__(self, other: Operand) -> "Jet":
        if not isinstance(other, Jet):
            scale = np.asarray(other, dtype=float)
            return self._wrap(self.coeffs * scale[..., None])
        _check_same_basis(self, other)
        table = self.basis.product
        pairs = self.coeffs[..., table.left] * other.coeffs[..., table.right]
        return self._wrap(np.add.reduceat(pairs, table.starts, axis=-1))

    __rmul__ = __mul__

    def __truediv__(self, other: Operand) -> "Jet":
        if not isinstance(other, Jet):
            divisor = np.asarray(other, dtype=float)
            if np.any(divisor == 0):
                raise DomainError("Деление джета на ноль")
            return self._wrap(self.coeffs / divisor[..., None])
        return self * other.reciprocal()

    def __rtruediv__(self, other: Operand) -> "Jet":
        return self._as_jet(other) * self.reciprocal()

    def __pow__(self, exponent: int) -> "Jet":
        return self.pow_int(exponent)

    # ------------------------------------------------------------------
    # Элементарные функции
    # ------------------------------------------------------------------

    def _compose(self, taylor: Sequence[np.ndarray]) -> "Jet":
        """
        Подставляет джет в ряд Σ c_k (u - u0)^k, где taylor[k] = f^(k)(u0) / k!.
        Приращение h = u - u0 не имеет свободного члена, поэтому h^k = 0 при k > max_order.
        """
        shift = np.zeros_like(self.coeffs)
        shift[..., 1:] = self.coeffs[..., 1:]
        increment = self._wrap(shift)

        result = np.zeros_like(self.coeffs)
        result[..., 0] = taylor[0]
        power = increment
        for k in range(1, self.max_order + 1):
            result = result + np.asarray(taylor[k])[..., None] * power.coeffs
            if k < self.max_order:
                power = power * increment
        return self._wrap(result)

    def _power_series(self, exponent: float) -> "Jet":
        u0 = self.value
        order = self.max_order
        taylor = []
        binom = 1.0
        for k in range(order + 1):
            if k > 0:
                binom *= (exponent - (k - 1)) / k
            if binom == 0.0:
                taylor.append(np.zeros_like(u0))
            else:
                taylor.append(binom * np.power(u0, exponent - k))
        return self._compose(taylor)

    def pow_int(self, exponent: int) -> "Jet":
        if not isinstance(exponent, (int, np.integer)) or isinstance(exponent, bool):
            raise ArgumentError(f"Показатель степени должен быть целым: {exponent!r}")
        if exponent < 0 and np.any(self.value == 0):
            raise DomainError(f"Отрицательная степень {exponent} от нулевого значения")
        if exponent == 0:
            return Jet.constant(np.ones(self.shape), self.basis)
        return self._power_series(float(exponent))

    def reciprocal(self) -> "Jet":
        if np.any(self.value == 0):
            raise DomainError("Деление на джет с нулевым значением")
        return self._power_series(-1.0)

    def sqrt(self) -> "Jet":
        u0 = self.value
        if np.any(u0 < 0):
            raise DomainError("Корень из отрицательного значения")
        if self.max_order > 0 and np.any(u0 == 0):
            raise DomainError("Корень не дифференцируем в нуле")
        if self.max_order == 0:
            return self._wrap(np.sqrt(self.coeffs))
        return self._power_series(0.5)

    def exp(self) -> "Jet":
        e = np.exp(self.value)
        return self._compose([e / math.factorial(k) for k in range(self.max_order + 1)])

    def log(self) -> "Jet":
        u0 = self.value
        if np.any(u0 <= 0):
            raise DomainError("Логарифм неположительного значения")
        taylor = [np.log(u0)]
        for k in range(1, self.max_order + 1):
            taylor.append((-1.0) ** (k + 1) / (k * u0 ** k))
        return self._compose(taylor)

    def sin(self) -> "Jet":
        s, c = np.sin(self.value), np.cos(self.value)
        cycle = (s, c, -s, -c)
        return self._compose([cycle[k % 4] / math.factorial(k) for k in range(self.max_order + 1)])

    def cos(self) -> "Jet":
        s, c = np.sin(self.value), np.cos(self.value)
        cycle = (c, -s, -c, s)
        return self._compose([cycle[k % 4] / math.factorial(k) for k in range(self.max_order + 1)])

    # ------------------------------------------------------------------
    # Дифференцирование и структура
    # ------------------------------------------------------------------

    def derivative(self, var: int) -> "Jet":
        """∂/∂v_var; порядок результата на единицу меньше"""
        self._check_var(var)
        if self.max_order == 0:
            raise ArgumentError("Джет порядка 0 нельзя дифференцировать")
        source, factor = self.basis.derivative_table(var)
        lower = get_basis(self.num_vars, self.max_order - 1)
        return Jet(lower, self.coeffs[..., source] * factor)

    def gradient(self, variables: Sequence[int]) -> "Jet":
        """Производные по списку переменных; новая тензорная ось добавляется последней"""
        parts = [self.derivative(v) for v in variables]
        return Jet(parts[0].basis, np.stack([p.coeffs for p in parts], axis=-2))

    def truncate(self, order: int) -> "Jet":
        """Отбрасывает мономы степени выше order"""
        if order > self.max_order:
            raise ArgumentError(
                f"Нельзя повысить порядок джета {self.max_order} до {order}"
            )
        if order == self.max_order:
            return self
        lower = get_basis(self.num_vars, order)
        return Jet(lower, self.coeffs[..., :lower.size])

    def partial(self, multi_index: Sequence[int]) -> np.ndarray:
        """Значение частной производной по мульти-индексу (порядок не важен)"""
        key = tuple(sorted(int(v) for v in multi_index))
        for v in key:
            self._check_var(v)
        if len(key) > self.max_order:
            raise ArgumentError(
                f"Степень мульти-индекса {len(key)} превышает порядок джета {self.max_order}"
            )
        i = self.basis.index[key]
        return self.coeffs[..., i] * self.basis.factorials[i]

    def transpose(self, *axes: int) -> "Jet":
        if sorted(axes) != list(range(self.ndim)):
            raise ArgumentError(f"Недопустимая перестановка осей {axes} для формы {self.shape}")
        return self._wrap(np.transpose(self.coeffs, tuple(axes) + (self.ndim,)))

    def moveaxis(self, source: int, destination: int) -> "Jet":
        axes = list(range(self.ndim))
        axes.insert(destination, axes.pop(source))
        return self.transpose(*axes)

    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        if len(key) > self.ndim or any(k is Ellipsis for k in key):
            raise ArgumentError(f"Индекс {key} не подходит для формы {self.shape}")
        return self._wrap(self.coeffs[key])

    def _check_var(self, var: int) -> None:
        if not 0 <= var < self.num_vars:
            raise ArgumentError(f"Номер переменной {var} вне диапазона [0, {self.num_vars})")


def _check_same_basis(a: Jet, b: Jet) -> None:
    if a.basis is b.basis:
        return
    if a.num_vars != b.num_vars or a.max_order != b.max_order:
        raise ArgumentError(
            f"Несовместимые джеты: ({a.num_vars} перем., порядок {a.max_order}) и "
            f"({b.num_vars} перем., порядок {b.max_order})"
        )


def contract(subscripts: str, left: Operand, right: Operand) -> Union[Jet, np.ndarray]:
    """
    Свёртка в нотации einsum для двух операндов, каждый из которых - джет
    или числовой массив. Произведение джетов усекается по порядку.

    Пример: contract("hm,imj->ihj", g_inv, lowered)
    """
    inputs, output = subscripts.replace(" ", "").split("->")
    sub_left, sub_right = inputs.split(",")
    if "Z" in subscripts:
        raise ArgumentError("Буква Z зарезервирована для оси коэффициентов")

    if isinstance(left, Jet) and isinstance(right, Jet):
        _check_same_basis(left, right)
        table = left.basis.product
        pairs = np.einsum(
            f"{sub_left}Z,{sub_right}Z->{output}Z",
            left.coeffs[..., table.left],
            right.coeffs[..., table.right],
        )
        return Jet(left.basis, np.add.reduceat(pairs, table.starts, axis=-1))
    if isinstance(left, Jet):
        coeffs = np.einsum(f"{sub_left}Z,{sub_right}->{output}Z", left.coeffs, np.asarray(right, float))
        return Jet(left.basis, coeffs)
    if isinstance(right, Jet):
        coeffs = np.einsum(f"{sub_left},{sub_right}Z->{output}Z", np.asarray(left, float), right.coeffs)
        return Jet(right.basis, coeffs)
    return np.einsum(subscripts, np.asarray(left, float), np.asarray(right, float))


def common_order(*jets: Jet) -> Tuple[Jet, ...]:
    """Усекает джеты до наименьшего общего порядка"""
    order = min(j.max_order for j in jets)
    return tuple(j.truncate(order) for j in jets)


# ----------------------------------------------------------------------
# Операции уровня модуля
# ----------------------------------------------------------------------

def seed_variable(value: float, var_index: int, num_vars: int, max_order: int) -> Jet:
    """
    Джет координатной функции v_var_index в точке value.

    Raises:
        ArgumentError: номер переменной или порядок вне допустимого диапазона
    """
    if not 1 <= max_order <= MAX_ORDER:
        raise ArgumentError(f"Порядок джета вне диапазона [1, {MAX_ORDER}]: {max_order}")
    if not 0 <= var_index < num_vars:
        raise ArgumentError(f"Номер переменной {var_index} вне диапазона [0, {num_vars})")
    basis = get_basis(num_vars, max_order)
    coeffs = np.zeros(basis.size)
    coeffs[0] = value
    coeffs[basis.index[(var_index,)]] = 1.0
    return Jet(basis, coeffs)


def seed_vector(values: Sequence[float], offset: int, num_vars: int, max_order: int) -> Jet:
    """Тензорный джет формы (len(values),) из координат v_offset, v_offset+1, ..."""
    return Jet.stack([
        seed_variable(float(v), offset + i, num_vars, max_order) for i, v in enumerate(values)
    ])


def jet_apply(op: str, args: Sequence[Jet], exponent: Optional[int] = None) -> Jet:
    """
    Применяет операцию из {add, sub, mul, div, sqrt, pow_int, sin, cos, exp, log}.

    Raises:
        ArgumentError: неизвестная операция, неверное число аргументов, несовместимые джеты
        DomainError: деление на ноль, корень или логарифм вне области определения
    """
    if op in BINARY_OPS:
        if len(args) != 2:
            raise ArgumentError(f"Операция {op} требует два аргумента, получено {len(args)}")
        a, b = args
        if not isinstance(a, Jet):
            a = b._as_jet(a)
        if op == "add":
            return a + b
        if op == "sub":
            return a - b
        if op == "mul":
            return a * b
        return a / b

    if op in UNARY_OPS:
        if len(args) != 1:
            raise ArgumentError(f"Операция {op} требует один аргумент, получено {len(args)}")
        (u,) = args
        if op == "pow_int":
            if exponent is None:
                raise ArgumentError("Для pow_int нужен целый показатель")
            return u.pow_int(exponent)
        return getattr(u, op)()

    raise ArgumentError(f"Неизвестная операция над джетами: {op}")


def extract_partial(jet: Jet, multi_index: Sequence[int]):
    """Частная производная (с факториальной нормировкой); для скалярного джета - float"""
    result = jet.partial(multi_index)
    return float(result) if np.ndim(result) == 0 else result
