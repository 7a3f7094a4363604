"""
Отчёты CLI: записи проверок и детерминированная JSON-сериализация.

Тело отчёта (всё, кроме timing) побайтно совпадает между повторными
запусками с одинаковой конфигурацией и seed.
"""
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from logger import get_logger

logger = get_logger(__name__)

FLOAT_DIGITS = 12


@dataclass
class CheckRecord:
    """Одна проверка: имя, якорь (что именно проверяется), невязка и допуск"""
    name: str
    anchor: str
    max_residual: float
    tolerance: float
    passed: Optional[bool] = None

    def __post_init__(self):
        if self.passed is None:
            self.passed = bool(math.isfinite(self.max_residual) and self.max_residual <= self.tolerance)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


@dataclass
class Report:
    """Результат команды CLI"""
    command: Dict[str, Any]
    checks: List[CheckRecord] = field(default_factory=list)
    classification: List[Dict[str, Any]] = field(default_factory=list)
    tensors: Optional[Dict[str, Any]] = None
    seconds: float = 0.0

    @property
    def failures(self) -> List[CheckRecord]:
        return [c for c in self.checks if not c.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def add(self, record: CheckRecord) -> CheckRecord:
        self.checks.append(record)
        marker = "✓" if record.passed else "✗"
        log = logger.info if record.passed else logger.warning
        log(f"{marker} {record.name} [{record.anchor}]: {record.max_residual:.3e} (допуск {record.tolerance:.1e})")
        return record

    def extend(self, records: List[CheckRecord]) -> None:
        for record in records:
            self.add(record)

    def body(self) -> Dict[str, Any]:
        """Тело отчёта без времени выполнения"""
        body: Dict[str, Any] = {
            "command": self.command,
            "summary": {
                "passed": self.passed,
                "checks": len(self.checks),
                "failures": len(self.failures),
            },
            "checks": [c.as_dict() for c in self.checks],
            "classification": self.classification,
        }
        if self.tensors is not None:
            body["tensors"] = self.tensors
        return _normalize(body)

    def to_dict(self) -> Dict[str, Any]:
        document = self.body()
        document["timing"] = {"seconds": round(self.seconds, 3)}
        return document

    def body_json(self) -> str:
        return dumps(self.body())

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def write(self, path: Optional[str]) -> str:
        """Записывает отчёт в файл (или только возвращает текст, если path=None)"""
        text = self.to_json()
        if path:
            out = Path(path)
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(text + "\n", encoding="utf-8")
            logger.info(f"Отчёт сохранён: {out}")
        return text


def dumps(document: Dict[str, Any]) -> str:
    return json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False)


def _normalize(value: Any) -> Any:
    """numpy-массивы и числа к спискам и float; нечисловые float к строкам"""
    if isinstance(value, dict):
        return {str(k): _normalize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_normalize(v) for v in value]
    if isinstance(value, np.ndarray):
        return _normalize(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        if not math.isfinite(number):
            return str(number)
        rounded = float(f"{number:.{FLOAT_DIGITS}g}")
        return 0.0 if rounded == 0 else rounded
    return value
