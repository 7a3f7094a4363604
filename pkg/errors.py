"""
Исключения, общие для всех модулей
"""
from typing import Optional, Sequence

import numpy as np


class FinslerError(Exception):
    """Базовое исключение проекта"""


class ArgumentError(FinslerError, ValueError):
    """Неверные аргументы операции (индексы, порядок, формы тензоров)"""


class ExpressionSyntaxError(ArgumentError):
    """Синтаксическая ошибка в выражении DSL"""

    def __init__(self, message: str, position: Optional[int] = None, text: Optional[str] = None):
        self.position = position
        self.text = text
        if position is not None:
            message = f"{message} (позиция {position})"
        super().__init__(message)


class DomainError(FinslerError, ArithmeticError):
    """
    Вычисление вне области определения: деление на ноль, корень из
    отрицательного числа, точка на нулевом сечении и т.п.
    """

    def __init__(self, message: str, sample: Optional[object] = None):
        self.sample = sample
        if sample is not None:
            message = f"{message} в точке {describe_location(sample)}"
        super().__init__(message)


class SingularMetricError(DomainError, np.linalg.LinAlgError):
    """Фундаментальный тензор вырожден в точке"""


class ConfigError(FinslerError, ValueError):
    """Ошибка конфигурации запуска"""


def describe_location(sample: object) -> str:
    """Форматирует точку (x, y) для сообщений об ошибках"""
    x: Sequence[float] = getattr(sample, "x", ())
    y: Sequence[float] = getattr(sample, "y", ())
    if len(x) == 0 and len(y) == 0:
        return repr(sample)
    fmt = lambda values: ", ".join(f"{v:.6g}" for v in values)
    return f"x=({fmt(x)}), y=({fmt(y)})"
