#!/usr/bin/env python3
"""
Командная строка: проверка тождеств, классификация полных лифтов и снимок тензоров.

    python cli.py verify --config configs/randers.json [--mode jet|fd] [--out report.json]
    python cli.py classify --config configs/euclidean2.json [--out report.json]
    python cli.py tensors --config configs/randers.json --x 0,0 --y 1,0 [--mode jet|fd]

Коды выхода: 0 - все проверки пройдены, 1 - есть нарушения,
2 - ошибка конфигурации или аргументов, 3 - точка вне области определения.
"""
import argparse
import sys
import time
from typing import List, Optional, Sequence, Tuple

from config import AppConfig, RunConfig
from conformal_checker import build_grid, classify_base_field, homothety_suite, verdict_stability
from errors import ArgumentError, ConfigError, DomainError
from finite_difference import snapshot as fd_snapshot
from finsler_structure import FinslerStructure, StructureFactory, TangentSample
from identity_suites import (
    cross_mode_checks, frame_bracket_checks, lie_checks, lift_checks, structure_checks, tensor_checks,
)
from lie_calculus import VectorFieldOnM
from lift_metric import LiftCoefficients, classify_lift
from logger import get_logger, setup_logging
from report import Report
from tensor_engine import GeometryJets

__version__ = "1.0.0"

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_DOMAIN = 3

logger = get_logger(__name__)


def _mode(value: str) -> str:
    return "finite_difference" if value == "fd" else value


def _csv(text: str) -> Tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"ожидался список чисел через запятую: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("пустой список координат")
    return values


COORDINATE_OPTIONS = ("--x", "--y")


def _attach_coordinates(argv: Sequence[str]) -> List[str]:
    """--x -1,0.5 -> --x=-1,0.5: иначе argparse примет отрицательное значение за опцию"""
    attached: List[str] = []
    tokens = iter(argv)
    for token in tokens:
        if token in COORDINATE_OPTIONS:
            value = next(tokens, None)
            attached.append(token if value is None else f"{token}={value}")
        else:
            attached.append(token)
    return attached


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="finsler",
        description="Финслерова геометрия: тензоры, лифт-метрики и полные лифты векторных полей",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="уровень логирования (перекрывает LOG_LEVEL)")
    commands = parser.add_subparsers(dest="command", required=True)

    verify = commands.add_parser("verify", help="проверить все тождества на сетке",
                                 formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    verify.add_argument("--config", required=True, help="JSON-файл конфигурации запуска")
    verify.add_argument("--mode", choices=("jet", "fd", "finite_difference"), default=None,
                        help="режим вычисления тензоров (по умолчанию из конфигурации)")
    verify.add_argument("--out", default=None, help="куда записать отчёт (иначе stdout)")

    classify = commands.add_parser("classify", help="классифицировать полные лифты полей",
                                   formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    classify.add_argument("--config", required=True, help="JSON-файл конфигурации запуска")
    classify.add_argument("--out", default=None, help="куда записать отчёт (иначе stdout)")

    tensors = commands.add_parser("tensors", help="вывести все тензоры в точке",
                                  formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    tensors.add_argument("--config", required=True, help="JSON-файл конфигурации запуска")
    tensors.add_argument("--x", required=True, type=_csv, help="координаты x через запятую")
    tensors.add_argument("--y", required=True, type=_csv, help="координаты y через запятую")
    tensors.add_argument("--mode", choices=("jet", "fd", "finite_difference"), default=None,
                         help="режим вычисления тензоров (по умолчанию из конфигурации)")
    tensors.add_argument("--out", default=None, help="куда записать отчёт (иначе stdout)")

    return parser.parse_args(_attach_coordinates(sys.argv[1:] if argv is None else argv))


# ----------------------------------------------------------------------
# Команды
# ----------------------------------------------------------------------

def _fields(config: RunConfig) -> List[VectorFieldOnM]:
    dimension = config.structure.dimension
    return [VectorFieldOnM.from_strings(f.components, dimension, name=f.name) for f in config.fields]


def _structure(config: RunConfig, grid: Sequence[TangentSample]) -> FinslerStructure:
    """Структура, параметры которой проверены в базовых точках сетки"""
    points = list(dict.fromkeys(sample.x for sample in grid))
    return StructureFactory.create(config.structure, points)


def _command_echo(name: str, config: RunConfig, structure: FinslerStructure, mode: str) -> dict:
    return {
        "name": name,
        "config": config.source,
        "mode": mode,
        "seed": config.seed,
        "structure": structure.describe(),
        "lift": {"alpha": config.lift.alpha, "beta": config.lift.beta, "gamma": config.lift.gamma},
    }


def cmd_verify(config: RunConfig, app_config: Optional[AppConfig] = None,
               mode: Optional[str] = None) -> Report:
    """Все наборы тождеств на сетке из конфигурации"""
    app_config = app_config or AppConfig.from_env()
    mode = mode or config.mode
    grid = build_grid(config.structure.dimension, config.grid, config.seed, app_config.min_fiber_norm)
    structure = _structure(config, grid)
    coeffs = LiftCoefficients.from_spec(config.lift)
    tolerances = config.tolerances
    step = app_config.fd_step

    logger.info("=" * 60)
    logger.info(f"Проверка тождеств: {structure.kind}, n={structure.dimension}, режим {mode}, точек {len(grid)}")
    logger.info("=" * 60)

    report = Report(command=_command_echo("verify", config, structure, mode))
    report.extend(structure_checks(structure, grid, tolerances))
    report.extend(tensor_checks(structure, grid, tolerances, mode, step))
    report.extend(cross_mode_checks(structure, grid, tolerances, step))
    report.extend(lift_checks(structure, grid, coeffs, tolerances, config.seed))
    report.extend(frame_bracket_checks(structure, grid, tolerances, step))
    report.extend(lie_checks(structure, _fields(config), grid, coeffs, tolerances, config.seed, step))

    logger.info(f"Итог: {len(report.checks) - len(report.failures)}/{len(report.checks)} проверок пройдено")
    return report


def cmd_classify(config: RunConfig, app_config: Optional[AppConfig] = None) -> Report:
    """Классификация полного лифта каждого поля и проверка гомотетичности"""
    app_config = app_config or AppConfig.from_env()
    fields = _fields(config)
    if not fields:
        raise ConfigError("fields: для classify нужно хотя бы одно векторное поле")
    grid = build_grid(config.structure.dimension, config.grid, config.seed, app_config.min_fiber_norm)
    structure = _structure(config, grid)
    coeffs = LiftCoefficients.from_spec(config.lift)

    logger.info("=" * 60)
    logger.info(f"Классификация {len(fields)} полей, лифт {coeffs.as_tuple()}, точек {len(grid)}")
    logger.info("=" * 60)

    summary = homothety_suite(structure, coeffs, fields, grid, config.tolerances)
    report = Report(command=_command_echo("classify", config, structure, config.mode))
    report.extend(summary.evidence)
    for V, field_report in zip(fields, summary.reports):
        projection = field_report.as_dict()
        projection["base_verdict"] = classify_base_field(structure, V, grid, config.tolerances).verdict
        report.classification.append(projection)
    report.extend(verdict_stability(structure, coeffs, fields, summary.reports, config.grid, config.seed,
                                    config.tolerances, app_config.min_fiber_norm))
    return report


def cmd_tensors(config: RunConfig, at: TangentSample, mode: Optional[str] = None) -> Report:
    """Снимок всех тензоров в точке"""
    mode = mode or config.mode
    if at.dimension != config.structure.dimension:
        raise ArgumentError(f"Размерность точки {at.dimension} не совпадает с размерностью структуры")
    structure = _structure(config, [at])
    if mode == "jet":
        snap = GeometryJets(structure, at).snapshot()
    else:
        snap = fd_snapshot(structure, at)
    coeffs = LiftCoefficients.from_spec(config.lift)
    tensors = dict(snap.tensors())
    tensors["F"] = structure.value(at)
    tensors["lift_class"] = classify_lift(snap.g, coeffs)
    tensors["sample"] = {"x": list(at.x), "y": list(at.y)}
    report = Report(command=_command_echo("tensors", config, structure, mode), tensors=tensors)
    logger.info(f"Снимок тензоров в точке x={at.x}, y={at.y} ({mode})")
    return report


# ----------------------------------------------------------------------
# Точка входа
# ----------------------------------------------------------------------

def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(argv)
    try:
        app_config = AppConfig.from_env()
        setup_logging(app_config, args.log_level)
    except ConfigError as e:
        print(f"❌ Ошибка конфигурации: {e}", file=sys.stderr)
        return EXIT_CONFIG

    started = time.perf_counter()
    try:
        config = RunConfig.from_file(args.config)
        if args.command == "verify":
            report = cmd_verify(config, app_config, _mode(args.mode) if args.mode else None)
        elif args.command == "classify":
            report = cmd_classify(config, app_config)
        else:
            sample = TangentSample(args.x, args.y, app_config.min_fiber_norm)
            report = cmd_tensors(config, sample, _mode(args.mode) if args.mode else None)
    except (ConfigError, ArgumentError) as e:
        logger.error(f"Ошибка конфигурации: {e}")
        return EXIT_CONFIG
    except DomainError as e:
        logger.error(f"Ошибка области определения: {e}")
        return EXIT_DOMAIN

    report.seconds = time.perf_counter() - started
    text = report.write(args.out)
    if not args.out:
        print(text)
    return EXIT_OK if report.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
