"""
Наборы проверок для команды verify.

Каждый набор возвращает список CheckRecord; максимум невязки берётся по всем
точкам сетки. Точки вне области определения структуры пропускаются с
предупреждением, пустой результат считается ошибкой области.
Дорогие эталоны (потоки, скобки, сверка режимов) считаются на детерминированной
подвыборке сетки.
"""
import math
from typing import Callable, Dict, List, Sequence

import numpy as np

from config import Tolerances
from errors import ArgumentError, DomainError
from finite_difference import DEFAULT_STEP, compare_snapshots
from finite_difference import snapshot as fd_snapshot
from finsler_structure import (
    FinslerStructure, TangentSample, check_euler_identity, check_homogeneity,
    check_positivity, check_strong_convexity,
)
from lie_calculus import (
    LieCalculus, VectorFieldOnM, bracket_check, lift_form_lie_check,
    nonlinear_connection_bracket_residual,
)
from lift_metric import LiftCoefficients, classify_lift, det_identity_residual
from logger import get_logger
from report import CheckRecord
from tensor_engine import GeometryJets, jet_identities, snapshot_identities

logger = get_logger(__name__)

ORACLE_SAMPLE_LIMIT = 24
FLOW_SAMPLE_LIMIT = 6
DET_TRIALS = 100

# (допуск из Tolerances, якорь) для тождеств по снимку тензоров
SNAPSHOT_CHECKS = {
    "g_symmetry": ("identity", "fundamental-tensor/symmetry"),
    "inverse": ("identity", "fundamental-tensor/inverse"),
    "cartan_symmetry": ("identity", "cartan-tensor/total-symmetry"),
    "y_cartan": ("identity", "cartan-tensor/y-contraction"),
    "deflection": ("identity", "cartan-connection/deflection-free"),
    "torsion": ("identity", "cartan-connection/h-torsion-free"),
    "h_metricity": ("identity", "cartan-connection/h-metric"),
    "v_metricity": ("identity", "cartan-connection/v-metric"),
    "curvature_contraction": ("curvature", "hh-curvature/y-contraction"),
    "curvature_antisymmetry": ("curvature", "hh-curvature/antisymmetry"),
}

JET_CHECKS = {
    "h_metricity_jet": ("identity", "covariant-derivative/h-metricity"),
    "v_metricity_jet": ("identity", "covariant-derivative/v-metricity"),
    "horizontal_F": ("identity", "nonlinear-connection/horizontal-constancy-of-F"),
    "spray_homogeneity": ("identity", "spray/2-homogeneity"),
}


def oracle_subset(grid: Sequence[TangentSample], limit: int = ORACLE_SAMPLE_LIMIT) -> List[TangentSample]:
    """Равномерная по индексу подвыборка сетки, не больше limit точек"""
    if len(grid) <= limit:
        return list(grid)
    stride = math.ceil(len(grid) / limit)
    return list(grid[::stride])[:limit]


def _collect(name: str, grid: Sequence[TangentSample],
             compute: Callable[[TangentSample], Dict[str, float]]) -> Dict[str, float]:
    """Максимумы невязок по точкам; DomainError в точке - пропуск"""
    worst: Dict[str, float] = {}
    rejected = 0
    for sample in grid:
        try:
            residuals = compute(sample)
        except DomainError as e:
            rejected += 1
            logger.warning(f"{name}: точка пропущена ({e})")
            continue
        for key, value in residuals.items():
            worst[key] = max(worst.get(key, 0.0), value)
    if rejected:
        logger.warning(f"{name}: пропущено точек {rejected} из {len(grid)}")
    if not worst and grid:
        raise DomainError(f"{name}: ни одна точка сетки не лежит в области определения")
    return worst


# ----------------------------------------------------------------------
# Структура
# ----------------------------------------------------------------------

def structure_checks(structure: FinslerStructure, grid: Sequence[TangentSample],
                     tolerances: Tolerances) -> List[CheckRecord]:
    """Аксиомы финслеровой структуры на сетке"""
    reports = [
        (check_homogeneity(structure, grid, tolerance=tolerances.homogeneity),
         "finsler-function/positive-homogeneity"),
        (check_positivity(structure, grid), "finsler-function/positivity"),
        (check_euler_identity(structure, grid, tolerance=tolerances.euler),
         "finsler-function/euler-identity"),
        (check_strong_convexity(structure, grid, tolerance=tolerances.convexity),
         "fundamental-tensor/positive-definite"),
    ]
    return [
        CheckRecord(f"structure/{report.name}", anchor, report.max_residual, report.tolerance, report.passed)
        for report, anchor in reports
    ]


# ----------------------------------------------------------------------
# Тензоры
# ----------------------------------------------------------------------

def tensor_checks(structure: FinslerStructure, grid: Sequence[TangentSample], tolerances: Tolerances,
                  mode: str = "jet", step: float = DEFAULT_STEP) -> List[CheckRecord]:
    """
    Тождества связности и кривизны. В режиме finite_difference снимок тензоров
    строится разностями, а допуск не меньше tolerances.cross_mode.
    """
    if mode == "jet":
        def compute(sample: TangentSample) -> Dict[str, float]:
            geometry = GeometryJets(structure, sample)
            residuals = snapshot_identities(geometry.snapshot())
            residuals.update(jet_identities(geometry))
            return residuals
        checks = {**SNAPSHOT_CHECKS, **JET_CHECKS}
    elif mode == "finite_difference":
        def compute(sample: TangentSample) -> Dict[str, float]:
            return snapshot_identities(fd_snapshot(structure, sample, step))
        checks = SNAPSHOT_CHECKS
    else:
        raise ArgumentError(f"Неизвестный режим: {mode}")

    worst = _collect(f"tensors[{mode}]", grid, compute)
    records = []
    for name, (tolerance_key, anchor) in checks.items():
        tolerance = getattr(tolerances, tolerance_key)
        if mode == "finite_difference":
            tolerance = max(tolerance, tolerances.cross_mode)
        records.append(CheckRecord(f"tensors/{name}", anchor, worst.get(name, 0.0), tolerance))
    return records


def cross_mode_checks(structure: FinslerStructure, grid: Sequence[TangentSample], tolerances: Tolerances,
                      step: float = DEFAULT_STEP) -> List[CheckRecord]:
    """Сверка каждого тензора снимка: джеты против конечных разностей"""
    def compute(sample: TangentSample) -> Dict[str, float]:
        return compare_snapshots(GeometryJets(structure, sample).snapshot(), fd_snapshot(structure, sample, step))

    worst = _collect("cross_mode", oracle_subset(grid), compute)
    return [
        CheckRecord(f"cross_mode/{name}", f"finite-difference-oracle/{name}", value, tolerances.cross_mode)
        for name, value in sorted(worst.items())
    ]


# ----------------------------------------------------------------------
# Лифт-метрика
# ----------------------------------------------------------------------

def random_spd(rng: np.random.Generator, dimension: int) -> np.ndarray:
    """Случайная симметричная положительно определённая матрица с умеренной обусловленностью"""
    A = rng.normal(size=(dimension, dimension))
    return A @ A.T + dimension * np.eye(dimension)


def random_coefficients(rng: np.random.Generator) -> LiftCoefficients:
    """Случайная невырожденная тройка (α, β, γ)"""
    while True:
        coeffs = LiftCoefficients(*(float(v) for v in rng.uniform(-2.0, 2.0, 3)))
        if abs(coeffs.discriminant) > 1e-3:
            return coeffs


def lift_checks(structure: FinslerStructure, grid: Sequence[TangentSample], coeffs: LiftCoefficients,
                tolerances: Tolerances, seed: int = 0) -> List[CheckRecord]:
    rng = np.random.default_rng(seed)
    random_worst = 0.0
    for trial in range(DET_TRIALS):
        dimension = 2 + trial % 2
        random_worst = max(random_worst, det_identity_residual(random_spd(rng, dimension), random_coefficients(rng)))

    mismatches = 0

    def compute(sample: TangentSample) -> Dict[str, float]:
        nonlocal mismatches
        g = GeometryJets(structure, sample, 2).g.value
        try:
            classify_lift(g, coeffs)
        except ArgumentError as e:
            mismatches += 1
            logger.warning(f"Классификация лифт-метрики не подтверждена спектром: {e}")
        return {"det": det_identity_residual(g, coeffs)}

    worst = _collect("lift", grid, compute)
    return [
        CheckRecord("lift/det_identity_random", "lift-metric/determinant-identity", random_worst, tolerances.det),
        CheckRecord("lift/det_identity_grid", "lift-metric/determinant-identity", worst["det"], tolerances.det),
        CheckRecord("lift/classification", "lift-metric/signature-classification", float(mismatches), 0.0,
                    passed=mismatches == 0),
    ]


# ----------------------------------------------------------------------
# Производные Ли и скобки
# ----------------------------------------------------------------------

def frame_bracket_checks(structure: FinslerStructure, grid: Sequence[TangentSample], tolerances: Tolerances,
                         step: float = DEFAULT_STEP) -> List[CheckRecord]:
    worst = _collect("brackets", oracle_subset(grid),
                     lambda s: bracket_check(structure, s, step).residuals)
    return [
        CheckRecord(f"frame/{name}", f"adapted-frame/bracket-{name.replace('_', '-')}", value, tolerances.oracle)
        for name, value in sorted(worst.items())
    ]


def lie_checks(structure: FinslerStructure, fields: Sequence[VectorFieldOnM], grid: Sequence[TangentSample],
               coeffs: LiftCoefficients, tolerances: Tolerances, seed: int = 0,
               step: float = DEFAULT_STEP) -> List[CheckRecord]:
    """
    Для каждого поля: £y = 0, формула перестановки ∇ и £, согласованность двух
    сборок £g̃, эталон потока для форм и кофрейма, скобка [X^c, δ_i].
    """
    records = []
    subset = oracle_subset(grid)
    flow_subset = oracle_subset(grid, FLOW_SAMPLE_LIMIT)
    for V in fields:
        def compute(sample: TangentSample) -> Dict[str, float]:
            calculus = LieCalculus(structure, V, sample)
            by_blocks = calculus.lift_metric_lie(coeffs)
            by_forms = calculus.lift_metric_lie_by_forms(coeffs)
            scale = max(1.0, float(np.max(np.abs(by_blocks))))
            return {
                "y_invariant": float(np.max(np.abs(calculus.lie_y.value))),
                "interchange": float(np.max(np.abs(calculus.interchange()))),
                "forms_consistency": float(np.max(np.abs(by_blocks - by_forms))) / scale,
                "nonlinear_connection_bracket": nonlinear_connection_bracket_residual(structure, V, sample, step),
            }

        worst = _collect(f"lie[{V.name}]", subset, compute)
        flows = _collect(f"flow[{V.name}]", flow_subset,
                         lambda s: lift_form_lie_check(structure, V, s, coeffs, seed=seed, step=step).residuals)
        records += [
            CheckRecord(f"lie/{V.name}/y_invariant", "complete-lift/lie-derivative-of-y",
                        worst["y_invariant"], tolerances.identity),
            CheckRecord(f"lie/{V.name}/interchange", "lie-derivative/interchange-with-h-covariant-derivative",
                        worst["interchange"], tolerances.interchange),
            CheckRecord(f"lie/{V.name}/forms_consistency", "lift-metric/lie-derivative-assembly-paths",
                        worst["forms_consistency"], tolerances.consistency),
            CheckRecord(f"lie/{V.name}/nonlinear_connection_bracket", "lie-derivative/nonlinear-connection-bracket",
                        worst["nonlinear_connection_bracket"], tolerances.oracle),
        ]
        records += [
            CheckRecord(f"lie/{V.name}/flow_{name}", f"lift-metric/flow-oracle-{name.replace('_', '-')}",
                        value, tolerances.oracle)
            for name, value in sorted(flows.items())
        ]
    return records
