"""
Общие фикстуры тестов: структуры, поля и небольшие сетки
"""
import pytest

from config import GridSpec
from conformal_checker import build_grid
from finsler_structure import (
    EuclideanStructure, TangentSample, make_randers, make_riemannian,
)
from lie_calculus import VectorFieldOnM

POLAR_POINTS = [(1.0, 0.0), (2.0, 0.0), (1.5, 0.5), (2.0, 1.0)]


@pytest.fixture
def euclidean2():
    return EuclideanStructure(2)


@pytest.fixture
def euclidean3():
    return EuclideanStructure(3)


@pytest.fixture
def polar():
    """Плоская метрика в полярных координатах: a = diag(1, x1^2)"""
    return make_riemannian([["1", "0"], ["0", "x1^2"]], validation_points=POLAR_POINTS)


@pytest.fixture
def randers():
    return make_randers(None, ["0.5", "0"])


@pytest.fixture
def curved_randers():
    """Рандерс с переменными коэффициентами: ненулевые связность и кривизна"""
    return make_randers([["1 + 0.2*x1^2", "0"], ["0", "1"]], ["0.3*sin(x2)", "0.2*x1"])


@pytest.fixture
def randers_constant():
    return make_randers([["2", "0.5"], ["0.5", "1"]], ["0.3", "-0.2"])


def field2(name, first, second):
    return VectorFieldOnM.from_strings([first, second], 2, name=name)


@pytest.fixture
def translation():
    return field2("translation", "1", "0")


@pytest.fixture
def rotation():
    return field2("rotation", "-x2", "x1")


@pytest.fixture
def dilation():
    return field2("dilation", "x1", "x2")


@pytest.fixture
def z_squared():
    return field2("z_squared", "x1^2 - x2^2", "2*x1*x2")


@pytest.fixture
def sample():
    return TangentSample((0.3, -0.4), (0.8, 0.6))


@pytest.fixture
def small_grid():
    """3x3 базовые точки, 4 направления, 2 радиуса"""
    return build_grid(2, GridSpec(count=3, directions=4, radii=[0.7, 1.3]))


@pytest.fixture
def tiny_grid():
    return build_grid(2, GridSpec(count=2, directions=3, radii=[1.0]))
