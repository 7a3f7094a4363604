"""
Логирование вычислительных прогонов: цветная консоль и файл журнала
"""
import logging
import sys
from pathlib import Path
from typing import Optional

import colorlog

from config import AppConfig

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

LOG_COLORS = {
    "DEBUG": "cyan",
    "INFO": "green",
    "WARNING": "yellow",
    "ERROR": "red",
    "CRITICAL": "bold_red",
}

# Библиотеки, чей DEBUG-вывод не нужен в журнале прогона
QUIET_LOGGERS = ("lark",)


def _file_handler(path: Path, level: int) -> logging.Handler:
    path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(path, encoding="utf-8")
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, DATE_FORMAT))
    return handler


def _console_handler(level: int) -> logging.Handler:
    # stdout занят отчётами
    handler = colorlog.StreamHandler(sys.stderr)
    handler.setLevel(level)
    handler.setFormatter(colorlog.ColoredFormatter(
        "%(log_color)s" + LOG_FORMAT,
        datefmt=DATE_FORMAT,
        log_colors=LOG_COLORS,
    ))
    return handler


def setup_logging(config: Optional[AppConfig] = None, level: Optional[str] = None) -> logging.Logger:
    """
    Настраивает корневой логгер для прогона CLI или тестов.

    Повторный вызов заменяет ранее установленные обработчики, поэтому
    несколько запусков main() в одном процессе не дублируют записи.

    Args:
        config: Настройки приложения (по умолчанию из окружения)
        level: Уровень из --log-level, имеет приоритет над LOG_LEVEL

    Returns:
        Корневой логгер
    """
    config = config or AppConfig.from_env()
    level_name = (level or config.log_level).upper()
    numeric_level = getattr(logging, level_name, logging.INFO)

    root = logging.getLogger()
    root.setLevel(numeric_level)
    for old in list(root.handlers):
        root.removeHandler(old)
        old.close()

    root.addHandler(_file_handler(Path(config.log_file), numeric_level))
    root.addHandler(_console_handler(numeric_level))

    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)

    root.info("=" * 60)
    root.info(f"Журнал прогона: уровень {level_name}, файл {config.log_file}")
    root.info("=" * 60)
    return root


def get_logger(name: str) -> logging.Logger:
    """Логгер модуля (передавайте __name__)"""
    return logging.getLogger(name)
