"""
Режим конечных разностей: те же тензоры, что и в tensor_engine, но верхний
слой производных берётся центральными разностями от точно вычисленных
(через джеты) величин предыдущего уровня. Используется как независимый
эталон для сверки режимов и в тестах.
"""
from typing import Callable, Dict, Sequence

import numpy as np

from errors import SingularMetricError
from finsler_structure import FinslerStructure, TangentSample
from logger import get_logger
from tensor_engine import CONDITION_LIMIT, GeometryJets, TensorSnapshot

logger = get_logger(__name__)

DEFAULT_STEP = 1e-4

ArrayFunction = Callable[[TangentSample], np.ndarray]


def _unit(size: int, index: int, step: float) -> np.ndarray:
    delta = np.zeros(size)
    delta[index] = step
    return delta


def central_difference(fn: ArrayFunction, sample: TangentSample, var: int,
                       step: float = DEFAULT_STEP) -> np.ndarray:
    """(f(p + h e_var) - f(p - h e_var)) / 2h по переменной var из (x, y)"""
    delta = _unit(2 * sample.dimension, var, step)
    forward = np.asarray(fn(sample.shifted(delta)), dtype=float)
    backward = np.asarray(fn(sample.shifted(-delta)), dtype=float)
    return (forward - backward) / (2 * step)


def fd_gradient(fn: ArrayFunction, sample: TangentSample, variables: Sequence[int],
                step: float = DEFAULT_STEP) -> np.ndarray:
    """Разностный градиент; индекс производной добавляется последним"""
    return np.stack([central_difference(fn, sample, v, step) for v in variables], axis=-1)


def fd_hessian(fn: Callable[[TangentSample], float], sample: TangentSample,
               variables: Sequence[int], step: float = DEFAULT_STEP) -> np.ndarray:
    """Гессиан скалярной функции по четырёхточечной схеме"""
    size = 2 * sample.dimension
    count = len(variables)
    hessian = np.empty((count, count))
    for a in range(count):
        for b in range(a, count):
            ea = _unit(size, variables[a], step)
            eb = _unit(size, variables[b], step)
            value = (
                fn(sample.shifted(ea + eb)) - fn(sample.shifted(ea - eb))
                - fn(sample.shifted(eb - ea)) + fn(sample.shifted(-ea - eb))
            ) / (4 * step * step)
            hessian[a, b] = hessian[b, a] = value
    return hessian


def fd_delta(fn: ArrayFunction, sample: TangentSample, N: np.ndarray,
             step: float = DEFAULT_STEP) -> np.ndarray:
    """δ_c T = ∂_c T - N^m_c ∂̇_m T по разностям; индекс c последним"""
    n = sample.dimension
    dx = fd_gradient(fn, sample, range(n), step)
    dy = fd_gradient(fn, sample, range(n, 2 * n), step)
    return dx - np.einsum("...m,mc->...c", dy, N)


def fd_fundamental_tensor(structure: FinslerStructure, sample: TangentSample,
                          step: float = DEFAULT_STEP) -> np.ndarray:
    """g_ij как половина разностного гессиана значений F^2 по y"""
    n = structure.dimension
    return 0.5 * fd_hessian(structure.squared_value, sample, range(n, 2 * n), step)


def fd_cartan_tensor(structure: FinslerStructure, sample: TangentSample,
                     step: float = DEFAULT_STEP) -> np.ndarray:
    n = structure.dimension
    return 0.5 * fd_gradient(lambda s: GeometryJets(structure, s, 2).g.value, sample, range(n, 2 * n), step)


def snapshot(structure: FinslerStructure, sample: TangentSample,
             step: float = DEFAULT_STEP) -> TensorSnapshot:
    """
    Все тензоры в точке в режиме конечных разностей.

    Raises:
        SingularMetricError: разностный g вырожден
    """
    n = structure.dimension
    x_vars = range(n)
    y_vars = range(n, 2 * n)
    y = np.array(sample.y)

    g = fd_fundamental_tensor(structure, sample, step)
    condition = np.linalg.cond(g)
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        raise SingularMetricError(
            f"Фундаментальный тензор вырожден (число обусловленности {condition:.3e})", sample=sample
        )
    g_inv = np.linalg.inv(g)

    def exact_g(s: TangentSample) -> np.ndarray:
        return GeometryJets(structure, s, 2).g.value

    def exact_dy_L(s: TangentSample) -> np.ndarray:
        return structure.squared_jet(s, 1).gradient(y_vars).value

    def exact_spray(s: TangentSample) -> np.ndarray:
        return GeometryJets(structure, s, 2).spray.value

    def exact_N(s: TangentSample) -> np.ndarray:
        return GeometryJets(structure, s, 3).N.value

    def exact_F(s: TangentSample) -> np.ndarray:
        return GeometryJets(structure, s, 3).F_h.value

    dot_g = fd_gradient(exact_g, sample, y_vars, step)
    C = 0.5 * dot_g
    C_mixed = np.einsum("hm,imj->ihj", g_inv, C)

    mixed = fd_gradient(exact_dy_L, sample, x_vars, step)
    d_x_L = fd_gradient(structure.squared_value, sample, x_vars, step)
    G = 0.25 * g_inv @ (mixed @ y - d_x_L)

    N = fd_gradient(exact_spray, sample, y_vars, step)

    delta_g = fd_delta(exact_g, sample, N, step)
    lowered = 0.5 * (delta_g.transpose(2, 0, 1) + delta_g - delta_g.transpose(0, 2, 1))
    F_h = np.einsum("hm,imj->ihj", g_inv, lowered)

    delta_N = fd_delta(exact_N, sample, N, step)
    R_h = delta_N - delta_N.transpose(0, 2, 1)

    delta_F = fd_delta(exact_F, sample, N, step)
    R_k = (
        delta_F - delta_F.transpose(0, 1, 3, 2)
        + np.einsum("kmj,mhi->khji", F_h, F_h)
        - np.einsum("kmi,mhj->khji", F_h, F_h)
        + np.einsum("khm,mji->khji", C_mixed, R_h)
    )

    logger.debug(f"Разностный снимок тензоров в точке x={sample.x}, y={sample.y}")
    return TensorSnapshot(
        mode="finite_difference",
        sample=sample,
        g=g,
        g_inv=g_inv,
        C=C,
        C_mixed=C_mixed,
        G=G,
        N=N,
        F_h=F_h,
        delta_g=delta_g,
        dot_g=dot_g,
        delta_F=delta_F,
        R_h=R_h,
        R_k=R_k,
    )


def compare_snapshots(first: TensorSnapshot, second: TensorSnapshot) -> Dict[str, float]:
    """Максимальная разность по каждому тензору, отнесённая к max(1, |первый|)"""
    residuals = {}
    for name, value in first.tensors().items():
        other = getattr(second, name)
        scale = max(1.0, float(np.max(np.abs(value))) if value.size else 0.0)
        residuals[name] = float(np.max(np.abs(value - other))) / scale if value.size else 0.0
    return residuals
