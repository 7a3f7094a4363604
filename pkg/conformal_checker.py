"""
Классификация полных лифтов векторных полей относительно лифт-метрики:
killing, homothetic, conformal_nonhomothetic или not_conformal.

В каждой точке сетки Ω оценивается из £_{X^c} g̃ = 2Ω g̃ методом наименьших
квадратов по норме Фробениуса; затем проверяется постоянство Ω по сетке.
Постоянство проверяется только на узлах сетки, связность базы не используется.
"""
import itertools
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import GridSpec, Tolerances
from errors import ArgumentError, DomainError
from finite_difference import DEFAULT_STEP
from finsler_structure import (
    DEFAULT_MIN_FIBER_NORM, FinslerStructure, TangentSample, base_lattice, fiber_directions,
)
from lie_calculus import LieCalculus, VectorFieldOnM
from lift_metric import LiftCoefficients, build_lift_metric
from logger import get_logger
from report import CheckRecord
from tensor_engine import GeometryJets

logger = get_logger(__name__)

KILLING = "killing"
HOMOTHETIC = "homothetic"
CONFORMAL_NONHOMOTHETIC = "conformal_nonhomothetic"
NOT_CONFORMAL = "not_conformal"
VERDICTS = (KILLING, HOMOTHETIC, CONFORMAL_NONHOMOTHETIC, NOT_CONFORMAL)

# killing и homothetic требуют невязки <= tol во всех принятых точках;
# любая точка с большей невязкой даёт not_conformal. Если невязка больше
# OUTLIER_FACTOR·tol менее чем в OUTLIER_SHARE точек, нарушение помечается
# как локальное (localized), вердикт при этом остаётся not_conformal.
OUTLIER_FACTOR = 10.0
OUTLIER_SHARE = 0.25

# Точки с худшей обусловленностью метрики отклоняются, как точки вне области
MAX_CONDITION = 1e10


@dataclass
class OmegaSample:
    sample: TangentSample
    omega: float
    residual: float
    lie_n_max: float = 0.0
    connection_max: float = 0.0
    inlier: bool = True


@dataclass
class ConformalReport:
    """Итог классификации одного поля"""
    field_name: str
    verdict: str
    omega_samples: List[OmegaSample] = field(default_factory=list)
    omega_mean: float = 0.0
    omega_spread: float = 0.0
    max_residual: float = 0.0
    vertical_gradient_max: float = 0.0
    horizontal_gradient_max: float = 0.0
    outliers: int = 0
    rejected: int = 0
    localized: bool = False
    coefficients: Optional[LiftCoefficients] = None

    @property
    def is_conformal(self) -> bool:
        return self.verdict != NOT_CONFORMAL

    @property
    def lie_n_max(self) -> float:
        return max((s.lie_n_max for s in self._inliers()), default=0.0)

    @property
    def connection_max(self) -> float:
        return max((s.connection_max for s in self._inliers()), default=0.0)

    def _inliers(self) -> List[OmegaSample]:
        return [s for s in self.omega_samples if s.inlier]

    def as_dict(self) -> Dict[str, object]:
        """Проекция для отчёта CLI"""
        return {
            "field": self.field_name,
            "verdict": self.verdict,
            "omega_mean": self.omega_mean,
            "omega_spread": self.omega_spread,
            "max_residual": self.max_residual,
            "vertical_gradient_max": self.vertical_gradient_max,
            "horizontal_gradient_max": self.horizontal_gradient_max,
            "outliers": self.outliers,
            "samples": len(self.omega_samples),
            "rejected": self.rejected,
            "localized": self.localized,
        }


@dataclass
class HomothetySummary:
    """Сводка проверки «конформный полный лифт гомотетичен» по набору полей"""
    coefficients: LiftCoefficients
    reports: List[ConformalReport] = field(default_factory=list)
    evidence: List[CheckRecord] = field(default_factory=list)

    @property
    def conformal_nonhomothetic(self) -> List[str]:
        return [r.field_name for r in self.reports if r.verdict == CONFORMAL_NONHOMOTHETIC]

    @property
    def passed(self) -> bool:
        return not self.conformal_nonhomothetic and all(e.passed for e in self.evidence)


# ----------------------------------------------------------------------
# Оценка Ω и сетки
# ----------------------------------------------------------------------

def estimate_omega(lie_g: np.ndarray, lift_g: np.ndarray) -> Tuple[float, float]:
    """
    Ω = <£g̃, g̃>_F / (2 <g̃, g̃>_F), невязка ‖£g̃ - 2Ω g̃‖_F / max(1, ‖g̃‖_F).

    Raises:
        ArgumentError: нулевая метрика или несовпадение форм
    """
    lie_g = np.asarray(lie_g, dtype=float)
    lift_g = np.asarray(lift_g, dtype=float)
    if lie_g.shape != lift_g.shape:
        raise ArgumentError(f"Формы не совпадают: {lie_g.shape} и {lift_g.shape}")
    norm_squared = float(np.sum(lift_g * lift_g))
    if norm_squared == 0:
        raise ArgumentError("Нулевая метрика: Ω не определена")
    omega = float(np.sum(lie_g * lift_g)) / (2 * norm_squared)
    residual = float(np.linalg.norm(lie_g - 2 * omega * lift_g)) / max(1.0, np.sqrt(norm_squared))
    return omega, residual


def build_grid(dimension: int, spec: GridSpec, seed: int = 0,
               min_fiber_norm: float = DEFAULT_MIN_FIBER_NORM) -> List[TangentSample]:
    """
    Сетка классификации: решётка базовых точек × направления × радиусы.
    При jitter > 0 каждая базовая точка сдвигается (одинаково для всего слоя)
    на равномерный шум из генератора с заданным seed.
    """
    rng = np.random.default_rng(seed)
    unit = fiber_directions(dimension, spec.directions)
    samples = []
    for x in base_lattice(dimension, spec.lower, spec.upper, spec.count):
        if spec.jitter > 0:
            x = tuple(float(v) for v in np.asarray(x) + rng.uniform(-spec.jitter, spec.jitter, dimension))
        for radius in spec.radii:
            for direction in unit:
                samples.append(TangentSample(tuple(x), tuple(float(radius * d) for d in direction), min_fiber_norm))
    return samples


def _group_by_base(samples: Sequence[OmegaSample]) -> Dict[Tuple[float, ...], List[OmegaSample]]:
    groups: Dict[Tuple[float, ...], List[OmegaSample]] = {}
    for item in samples:
        groups.setdefault(item.sample.x, []).append(item)
    return groups


def _check_grid(grid: Sequence[TangentSample]) -> None:
    if not grid:
        raise ArgumentError("grid empty: нет точек для классификации")
    fibers: Dict[Tuple[float, ...], set] = {}
    for sample in grid:
        fibers.setdefault(sample.x, set()).add(sample.y)
    if len(fibers) < 2:
        raise ArgumentError("Сетка должна содержать не менее двух базовых точек")
    if any(len(ys) < 2 for ys in fibers.values()):
        raise ArgumentError("Над каждой базовой точкой нужно не менее двух векторов y")


# ----------------------------------------------------------------------
# Классификация
# ----------------------------------------------------------------------

PairFunction = Callable[[TangentSample], Tuple[np.ndarray, np.ndarray, float, float]]


def _omega_only(pair: PairFunction, sample: TangentSample) -> float:
    lie_g, metric, _, _ = pair(sample)
    return estimate_omega(lie_g, metric)[0]


def _vertical_gradient(pair: PairFunction, inliers: Sequence[OmegaSample], step: float,
                       by_difference: bool = True) -> float:
    """max |∂̇_k Ω|: по парам точек одного слоя и (опционально) разностями по y в первой точке слоя"""
    worst = 0.0
    for group in _group_by_base(inliers).values():
        for first, second in itertools.combinations(group, 2):
            distance = float(np.linalg.norm(np.subtract(first.sample.y, second.sample.y)))
            if distance > 0:
                worst = max(worst, abs(first.omega - second.omega) / distance)
        if not by_difference:
            continue
        anchor = group[0].sample
        n = anchor.dimension
        for k in range(n):
            delta = np.zeros(2 * n)
            delta[n + k] = step
            try:
                forward = _omega_only(pair, anchor.shifted(delta))
                backward = _omega_only(pair, anchor.shifted(-delta))
            except DomainError as e:
                logger.debug(f"Разность по y пропущена: {e}")
                continue
            worst = max(worst, abs(forward - backward) / (2 * step))
    return worst


def _horizontal_gradient(inliers: Sequence[OmegaSample]) -> float:
    """max |ΔΩ| / |Δx| по средним значениям Ω в слоях"""
    means = {x: float(np.mean([s.omega for s in group])) for x, group in _group_by_base(inliers).items()}
    worst = 0.0
    for (x1, m1), (x2, m2) in itertools.combinations(means.items(), 2):
        distance = float(np.linalg.norm(np.subtract(x1, x2)))
        if distance > 0:
            worst = max(worst, abs(m1 - m2) / distance)
    return worst


def _classify(name: str, pair: PairFunction, grid: Sequence[TangentSample], tolerances: Tolerances,
              coefficients: Optional[LiftCoefficients], step: float,
              vertical_by_difference: bool = True) -> ConformalReport:
    _check_grid(grid)
    samples: List[OmegaSample] = []
    rejected = 0
    for sample in grid:
        try:
            lie_g, metric, lie_n_max, connection_max = pair(sample)
        except DomainError as e:
            rejected += 1
            logger.warning(f"Поле {name}: точка отклонена ({e})")
            continue
        condition = float(np.linalg.cond(metric))
        if not condition <= MAX_CONDITION:
            rejected += 1
            logger.warning(f"Поле {name}: точка x={sample.x}, y={sample.y} отклонена, "
                           f"число обусловленности метрики {condition:.3e}")
            continue
        omega, residual = estimate_omega(lie_g, metric)
        samples.append(OmegaSample(sample, omega, residual, lie_n_max, connection_max))
    if not samples:
        raise DomainError(f"Поле {name}: ни одна точка сетки не лежит в области определения")

    tol = tolerances.residual
    report = ConformalReport(field_name=name, verdict=NOT_CONFORMAL, omega_samples=samples,
                             rejected=rejected, coefficients=coefficients)
    report.max_residual = max(s.residual for s in samples)
    for s in samples:
        s.inlier = s.residual <= tol
    inliers = [s for s in samples if s.inlier]
    report.outliers = len(samples) - len(inliers)
    large = sum(1 for s in samples if s.residual > OUTLIER_FACTOR * tol)
    report.localized = 0 < report.outliers and large < OUTLIER_SHARE * len(samples)

    omegas = np.array([s.omega for s in (inliers or samples)])
    report.omega_mean = float(np.mean(omegas))
    report.omega_spread = float(np.max(omegas) - np.min(omegas))

    if report.outliers:
        report.verdict = NOT_CONFORMAL
        if report.localized:
            logger.warning(f"Поле {name}: уравнение конформности нарушено локально, "
                           f"{report.outliers} из {len(samples)} точек")
    else:
        report.vertical_gradient_max = _vertical_gradient(pair, inliers, step, vertical_by_difference)
        report.horizontal_gradient_max = _horizontal_gradient(inliers)
        if float(np.max(np.abs(omegas))) <= tol:
            report.verdict = KILLING
        elif report.omega_spread <= tolerances.spread:
            report.verdict = HOMOTHETIC
        else:
            report.verdict = CONFORMAL_NONHOMOTHETIC

    logger.info(f"Поле {name}: {report.verdict}, Ω = {report.omega_mean:.6g} "
                f"(разброс {report.omega_spread:.3e}, невязка {report.max_residual:.3e})")
    return report


def classify_field(structure: FinslerStructure, V: VectorFieldOnM, coeffs: LiftCoefficients,
                   grid: Sequence[TangentSample], tolerances: Optional[Tolerances] = None,
                   step: float = DEFAULT_STEP) -> ConformalReport:
    """
    Классифицирует полный лифт поля V относительно g̃ с коэффициентами coeffs.

    Raises:
        ArgumentError: вырожденная лифт-метрика или неподходящая сетка
        DomainError: ни одна точка сетки не вычислилась
    """
    if coeffs.is_singular:
        raise ArgumentError(f"lift metric singular: αγ - β² = {coeffs.discriminant:g}")
    tolerances = tolerances or Tolerances()

    def pair(sample: TangentSample):
        calculus = LieCalculus(structure, V, sample)
        lie_g = calculus.lift_metric_lie(coeffs)
        lift_g = build_lift_metric(calculus.geometry.g.value, coeffs).matrix
        lie_n_max = float(np.max(np.abs(calculus.lie_N.value)))
        connection_max = float(np.max(np.abs(calculus.connection_contraction())))
        return lie_g, lift_g, lie_n_max, connection_max

    return _classify(V.name, pair, grid, tolerances, coeffs, step)


def classify_base_field(structure: FinslerStructure, V: VectorFieldOnM, grid: Sequence[TangentSample],
                        tolerances: Optional[Tolerances] = None) -> ConformalReport:
    """
    Классифицирует само поле V на (M, g) по уравнению £_V g_ij = 2ρ g_ij;
    ρ возвращается в полях omega_*. Вертикальный градиент оценивается по парам точек слоя.
    """
    tolerances = tolerances or Tolerances()

    def pair(sample: TangentSample):
        calculus = LieCalculus(structure, V, sample, GeometryJets(structure, sample, 3))
        return calculus.lie_g.value, calculus.geometry.g.value, 0.0, 0.0

    return _classify(V.name, pair, grid, tolerances, None, DEFAULT_STEP, vertical_by_difference=False)


def homothety_suite(structure: FinslerStructure, coeffs: LiftCoefficients, fields: Sequence[VectorFieldOnM],
                    grid: Sequence[TangentSample], tolerances: Optional[Tolerances] = None) -> HomothetySummary:
    """
    Классифицирует все поля и проверяет, что ни один конформный полный лифт
    не оказался негомотетичным. Для killing/homothetic добавляются промежуточные
    проверки: при γ ≠ 0 £N = 0 и ∂̇Ω = 0, при γ = 0, β ≠ 0
    y^k (g_ai £F_k^a_j + g_aj £F_k^a_i) = 0.
    """
    tolerances = tolerances or Tolerances()
    summary = HomothetySummary(coefficients=coeffs)
    for V in fields:
        report = classify_field(structure, V, coeffs, grid, tolerances)
        summary.reports.append(report)
        summary.evidence.append(CheckRecord(
            f"homothety/{V.name}", "conformal-lift/omega-constant",
            0.0 if report.verdict != CONFORMAL_NONHOMOTHETIC else report.omega_spread,
            tolerances.spread,
        ))
        if report.verdict not in (KILLING, HOMOTHETIC):
            continue
        if coeffs.gamma != 0:
            summary.evidence.append(CheckRecord(
                f"homothety/{V.name}/lie_N", "conformal-lift/nonlinear-connection-invariant",
                report.lie_n_max, tolerances.nonlinear,
            ))
            summary.evidence.append(CheckRecord(
                f"homothety/{V.name}/vertical_gradient", "conformal-lift/omega-independent-of-y",
                report.vertical_gradient_max, tolerances.gradient,
            ))
        elif coeffs.beta != 0:
            summary.evidence.append(CheckRecord(
                f"homothety/{V.name}/connection", "conformal-lift/y-contracted-connection-derivative",
                report.connection_max, tolerances.nonlinear,
            ))
    if summary.conformal_nonhomothetic:
        logger.warning(f"✗ Конформные негомотетичные лифты: {summary.conformal_nonhomothetic}")
    else:
        logger.info(f"✓ Все конформные полные лифты гомотетичны ({len(summary.reports)} полей)")
    return summary


def refine_grid_spec(spec: GridSpec) -> GridSpec:
    """Решётка с вдвое меньшим шагом; все исходные базовые точки сохраняются"""
    count = 2 * spec.count - 1 if spec.count > 1 else 3
    return replace(spec, count=count)


def verdict_stability(structure: FinslerStructure, coeffs: LiftCoefficients, fields: Sequence[VectorFieldOnM],
                      reports: Sequence[ConformalReport], spec: GridSpec, seed: int = 0,
                      tolerances: Optional[Tolerances] = None,
                      min_fiber_norm: float = DEFAULT_MIN_FIBER_NORM) -> List[CheckRecord]:
    """
    Повторяет классификацию на измельчённой решётке с теми же допусками.
    Невязка записи - 1, если вердикт изменился, иначе 0.
    """
    tolerances = tolerances or Tolerances()
    refined = refine_grid_spec(spec)
    grid = build_grid(structure.dimension, refined, seed, min_fiber_norm)
    logger.info(f"Устойчивость вердиктов: решётка {spec.count} -> {refined.count}, точек {len(grid)}")

    records = []
    for V, coarse in zip(fields, reports):
        fine = classify_field(structure, V, coeffs, grid, tolerances)
        changed = fine.verdict != coarse.verdict
        if changed:
            logger.warning(f"✗ Поле {V.name}: вердикт {coarse.verdict} сменился на {fine.verdict}")
        records.append(CheckRecord(
            f"stability/{V.name}", "conformal-lift/verdict-stable-under-refinement",
            1.0 if changed else 0.0, 0.0,
        ))
    return records


def random_linear_fields(dimension: int, count: int, seed: int = 0) -> List[VectorFieldOnM]:
    """Случайные линейные поля v^i = A^i_j x^j с воспроизводимыми коэффициентами"""
    rng = np.random.default_rng(seed)
    fields = []
    for k in range(count):
        A = np.round(rng.normal(size=(dimension, dimension)), 6)
        components = [
            " + ".join(f"({A[i, j]:.6f})*x{j + 1}" for j in range(dimension))
            for i in range(dimension)
        ]
        fields.append(VectorFieldOnM.from_strings(components, dimension, name=f"linear_{k}"))
    return fields
