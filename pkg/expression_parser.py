"""
Язык выражений для финслеровых структур и векторных полей.

Грамматика (LALR, lark):
    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-'? power
    power  := atom ('^' integer)?
    atom   := number | ident | func '(' expr ')' | '(' expr ')'

Переменные x1..xn, y1..yn (нумерация с единицы), функции sqrt, sin, cos, exp, log.
Неявное умножение не поддерживается.
"""
import math
import re
from dataclasses import dataclass
from typing import Optional, Sequence, Set, Tuple, Union

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken, VisitError

from errors import ArgumentError, DomainError, ExpressionSyntaxError
from jet_arithmetic import Jet, JetBasis
from logger import get_logger

logger = get_logger(__name__)

FUNCTIONS = ("sqrt", "sin", "cos", "exp", "log")
_VARIABLE = re.compile(r"^([xy])([1-9][0-9]*)$")

GRAMMAR = r"""
    ?start: expr

    ?expr: term
         | expr "+" term      -> add
         | expr "-" term      -> sub

    ?term: factor
         | term "*" factor    -> mul
         | term "/" factor    -> div

    ?factor: power
           | "-" power        -> neg

    ?power: atom
          | atom "^" SIGNED_INT -> pow

    ?atom: NUMBER             -> number
         | NAME "(" expr ")"  -> call
         | NAME               -> name
         | "(" expr ")"

    %import common.NUMBER
    %import common.SIGNED_INT
    %import common.CNAME -> NAME
    %import common.WS
    %ignore WS
"""


# ----------------------------------------------------------------------
# Узлы дерева
# ----------------------------------------------------------------------

class ExprNode:
    """Базовый узел дерева выражения"""


@dataclass(frozen=True)
class Number(ExprNode):
    value: float


@dataclass(frozen=True)
class Variable(ExprNode):
    block: str   # "x" или "y"
    index: int   # с нуля


@dataclass(frozen=True)
class UnaryMinus(ExprNode):
    operand: ExprNode


@dataclass(frozen=True)
class BinaryOp(ExprNode):
    op: str
    left: ExprNode
    right: ExprNode


@dataclass(frozen=True)
class Power(ExprNode):
    base: ExprNode
    exponent: int


@dataclass(frozen=True)
class FunctionCall(ExprNode):
    name: str
    argument: ExprNode


Value = Union[float, Jet]


@v_args(inline=True)
class _TreeBuilder(Transformer):
    """Строит узлы ExprNode и проверяет идентификаторы"""

    def __init__(self, dimension: int):
        super().__init__()
        self.dimension = dimension

    def number(self, token):
        return Number(float(token))

    def name(self, token):
        match = _VARIABLE.match(str(token))
        if not match:
            raise ArgumentError(f"Неизвестный идентификатор '{token}' (позиция {token.start_pos})")
        index = int(match.group(2))
        if index > self.dimension:
            raise ArgumentError(
                f"Индекс переменной '{token}' превышает размерность {self.dimension}"
            )
        return Variable(match.group(1), index - 1)

    def call(self, token, argument):
        if str(token) not in FUNCTIONS:
            raise ArgumentError(f"Неизвестная функция '{token}' (позиция {token.start_pos})")
        return FunctionCall(str(token), argument)

    def neg(self, operand):
        return UnaryMinus(operand)

    def pow(self, base, exponent):
        return Power(base, int(exponent))

    def add(self, left, right):
        return BinaryOp("+", left, right)

    def sub(self, left, right):
        return BinaryOp("-", left, right)

    def mul(self, left, right):
        return BinaryOp("*", left, right)

    def div(self, left, right):
        return BinaryOp("/", left, right)


_parser = Lark(GRAMMAR, parser="lalr")


# ----------------------------------------------------------------------
# Дерево выражения
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ExprTree:
    """Разобранное выражение с размерностью пространства переменных"""
    root: ExprNode
    dimension: int
    text: Optional[str] = None

    @property
    def variables(self) -> Set[Tuple[str, int]]:
        found: Set[Tuple[str, int]] = set()
        _collect_variables(self.root, found)
        return found

    @property
    def uses_y(self) -> bool:
        return any(block == "y" for block, _ in self.variables)

    def evaluate(self, x: Sequence[float], y: Sequence[float] = ()) -> float:
        """Значение выражения в точке (float)"""
        return float(_evaluate(self.root, x, y))

    def evaluate_jet(self, x: Sequence[Value], y: Sequence[Value], basis: JetBasis) -> Jet:
        """
        Джет выражения. x и y - скалярные джеты (или числа) координат;
        постоянное выражение превращается в постоянный джет базиса basis.
        """
        result = _evaluate(self.root, x, y)
        if isinstance(result, Jet):
            return result
        return Jet.constant(result, basis)

    def pretty(self) -> str:
        return pretty(self.root)

    def scaled(self, factor: float) -> "ExprTree":
        return ExprTree(BinaryOp("*", Number(float(factor)), self.root), self.dimension)

    def __add__(self, other: "ExprTree") -> "ExprTree":
        return ExprTree(BinaryOp("+", self.root, other.root), max(self.dimension, other.dimension))


def parse_expression(text: str, dimension: int) -> ExprTree:
    """
    Разбирает выражение языка структур.

    Args:
        text: Текст выражения
        dimension: Размерность n, ограничивает индексы переменных

    Returns:
        Дерево выражения

    Raises:
        ExpressionSyntaxError: синтаксическая ошибка (с позицией)
        ArgumentError: неизвестный идентификатор или индекс больше n
    """
    if not text or not text.strip():
        raise ArgumentError("Пустое выражение")
    try:
        parsed = _parser.parse(text)
    except UnexpectedInput as e:
        position = _error_position(e, text)
        where = "в конце ввода" if position >= len(text.rstrip()) else f"у символа {text[position]!r}"
        raise ExpressionSyntaxError(f"Синтаксическая ошибка {where}", position=position, text=text) from None

    try:
        root = _TreeBuilder(dimension).transform(parsed)
    except VisitError as e:
        raise e.orig_exc from None
    if not isinstance(root, ExprNode):
        # Единственный токен без правила (не должно случаться при ?start)
        raise ExpressionSyntaxError("Не удалось построить дерево", position=0, text=text)
    logger.debug(f"Разобрано выражение: {text}")
    return ExprTree(root=root, dimension=dimension, text=text)


def _error_position(error: UnexpectedInput, text: str) -> int:
    if isinstance(error, UnexpectedEOF):
        return len(text)
    if isinstance(error, UnexpectedToken) and error.token.type == "$END":
        return len(text)
    if isinstance(error, UnexpectedCharacters):
        return error.pos_in_stream
    position = getattr(error, "pos_in_stream", None)
    return len(text) if position is None else position


def _collect_variables(node: ExprNode, found: Set[Tuple[str, int]]) -> None:
    if isinstance(node, Variable):
        found.add((node.block, node.index))
    elif isinstance(node, (UnaryMinus,)):
        _collect_variables(node.operand, found)
    elif isinstance(node, BinaryOp):
        _collect_variables(node.left, found)
        _collect_variables(node.right, found)
    elif isinstance(node, Power):
        _collect_variables(node.base, found)
    elif isinstance(node, FunctionCall):
        _collect_variables(node.argument, found)


# ----------------------------------------------------------------------
# Вычисление
# ----------------------------------------------------------------------

def _evaluate(node: ExprNode, x: Sequence[Value], y: Sequence[Value]) -> Value:
    if isinstance(node, Number):
        return node.value
    if isinstance(node, Variable):
        values = x if node.block == "x" else y
        if node.index >= len(values):
            raise ArgumentError(f"Нет значения для переменной {node.block}{node.index + 1}")
        return values[node.index]
    if isinstance(node, UnaryMinus):
        return -_evaluate(node.operand, x, y)
    if isinstance(node, BinaryOp):
        left = _evaluate(node.left, x, y)
        right = _evaluate(node.right, x, y)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if not isinstance(right, Jet) and right == 0:
            raise DomainError("Деление на ноль")
        return left / right
    if isinstance(node, Power):
        return _power(_evaluate(node.base, x, y), node.exponent)
    if isinstance(node, FunctionCall):
        return _apply_function(node.name, _evaluate(node.argument, x, y))
    raise ArgumentError(f"Неизвестный узел выражения: {node!r}")


def _power(base: Value, exponent: int) -> Value:
    if isinstance(base, Jet):
        return base.pow_int(exponent)
    if exponent < 0 and base == 0:
        raise DomainError(f"Отрицательная степень {exponent} от нуля")
    return float(base) ** exponent


def _apply_function(name: str, value: Value) -> Value:
    if isinstance(value, Jet):
        return getattr(value, name)()
    if name == "sqrt":
        if value < 0:
            raise DomainError("Корень из отрицательного числа")
        return math.sqrt(value)
    if name == "log":
        if value <= 0:
            raise DomainError("Логарифм неположительного числа")
        return math.log(value)
    return getattr(math, name)(value)


# ----------------------------------------------------------------------
# Печать
# ----------------------------------------------------------------------

def pretty(node: ExprNode) -> str:
    """Печатает дерево так, что повторный разбор даёт то же выражение"""
    if isinstance(node, Number):
        return repr(node.value)
    if isinstance(node, Variable):
        return f"{node.block}{node.index + 1}"
    if isinstance(node, UnaryMinus):
        return f"-({pretty(node.operand)})"
    if isinstance(node, BinaryOp):
        return f"({pretty(node.left)} {node.op} {pretty(node.right)})"
    if isinstance(node, Power):
        base = pretty(node.base)
        if not isinstance(node.base, (Variable, FunctionCall)):
            base = f"({base})"
        return f"{base}^{node.exponent}"
    if isinstance(node, FunctionCall):
        return f"{node.name}({pretty(node.argument)})"
    raise ArgumentError(f"Неизвестный узел выражения: {node!r}")
