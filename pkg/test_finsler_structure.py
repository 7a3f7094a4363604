"""
Тесты финслеровых структур и проверок аксиом
"""
import numpy as np
import pytest

from config import StructureSpec
from errors import ArgumentError, DomainError
from finsler_structure import (
    EuclideanStructure, ExpressionStructure, KropinaStructure, RandersStructure, TangentSample,
    StructureFactory, check_euler_identity, check_homogeneity, check_positivity,
    check_strong_convexity, default_validation_grid, fiber_directions, make_kropina, make_randers,
    make_riemannian,
)


@pytest.fixture
def grid2():
    return default_validation_grid(2, count=2, directions=6, radii=(0.5, 2.0))


class TestTangentSample:
    """Точки касательного расслоения"""

    def test_rejects_zero_section(self):
        with pytest.raises(DomainError):
            TangentSample((0.0, 0.0), (0.0, 0.0))

    def test_rejects_mismatched_dimensions(self):
        with pytest.raises(ArgumentError):
            TangentSample((0.0, 0.0), (1.0,))

    def test_shifted_moves_both_blocks(self):
        sample = TangentSample((1.0, 2.0), (3.0, 4.0))
        moved = sample.shifted([0.5, 0.0, 0.0, -1.0])
        assert moved.x == (1.5, 2.0)
        assert moved.y == (3.0, 3.0)
        assert sample.with_fiber((1.0, 0.0)).x == sample.x


class TestEvaluation:
    """Значения F и её производные"""

    def test_euclidean_value_and_fiber_derivative(self, euclidean2):
        sample = TangentSample((0.0, 0.0), (3.0, 4.0))
        assert euclidean2.value(sample) == pytest.approx(5.0)
        jet = euclidean2.evaluate_F(sample, 1)
        assert jet.partial((2,)) == pytest.approx(0.6)
        assert jet.partial((3,)) == pytest.approx(0.8)
        assert jet.partial((0,)) == 0.0

    def test_euclidean_squared_is_exact_quadratic(self, euclidean3):
        sample = TangentSample((0.1, 0.2, 0.3), (1.0, -2.0, 2.0))
        jet = euclidean3.squared_jet(sample, 2)
        assert jet.value == pytest.approx(9.0)
        assert jet.partial((3, 3)) == pytest.approx(2.0)
        assert jet.partial((3, 4)) == pytest.approx(0.0)

    def test_randers_value(self, randers):
        assert randers.value(TangentSample((0.0, 0.0), (1.0, 0.0))) == pytest.approx(1.5)
        assert randers.value(TangentSample((0.0, 0.0), (-1.0, 0.0))) == pytest.approx(0.5)

    def test_riemannian_polar_value(self, polar):
        sample = TangentSample((2.0, 0.0), (1.0, 1.0))
        assert polar.value(sample) == pytest.approx(np.sqrt(5.0))

    def test_expression_structure(self):
        structure = ExpressionStructure("sqrt(y1^2 + y2^2) + 0.25*y1", 2)
        assert structure.value(TangentSample((0.0, 0.0), (2.0, 0.0))) == pytest.approx(2.5)
        assert structure.describe()["text"] == "sqrt(y1^2 + y2^2) + 0.25*y1"

    def test_kropina_domain(self):
        structure = make_kropina(None, ["1", "0"])
        assert structure.value(TangentSample((0.0, 0.0), (1.0, 1.0))) == pytest.approx(2.0)
        with pytest.raises(DomainError) as info:
            structure.value(TangentSample((0.0, 0.0), (-1.0, 1.0)))
        assert info.value.sample is not None

    def test_sample_dimension_must_match(self, euclidean2):
        with pytest.raises(ArgumentError):
            euclidean2.value(TangentSample((0.0, 0.0, 0.0), (1.0, 0.0, 0.0)))


class TestConstruction:
    """Проверка параметров при создании"""

    def test_randers_norm_must_be_below_one(self):
        with pytest.raises(ArgumentError, match="‖b‖_a"):
            make_randers(None, ["1.2", "0"])

    def test_randers_norm_measured_in_a(self):
        # ‖b‖_a = 0.9 / sqrt(4) = 0.45
        structure = make_randers([["4", "0"], ["0", "1"]], ["0.9", "0"])
        assert isinstance(structure, RandersStructure)

    def test_riemannian_must_be_positive_definite(self):
        with pytest.raises(ArgumentError):
            make_riemannian([["1", "0"], ["0", "x1"]])

    def test_riemannian_must_be_symmetric(self):
        with pytest.raises(ArgumentError):
            make_riemannian([["1", "0.5"], ["0", "1"]])

    def test_coefficients_cannot_depend_on_fiber(self):
        with pytest.raises(ArgumentError, match="не должен зависеть от y"):
            make_riemannian([["1 + y1^2", "0"], ["0", "1"]])

    def test_validation_points_limit_the_check(self):
        structure = make_riemannian([["1", "0"], ["0", "x1^2"]], validation_points=[(1.0, 0.0)])
        assert structure.metric_matrix((3.0, 0.0))[1, 1] == pytest.approx(9.0)

    @pytest.mark.parametrize("data, expected", [
        ({"kind": "euclidean", "dimension": 3}, EuclideanStructure),
        ({"kind": "randers", "dimension": 2, "b": ["0.2", "0"]}, RandersStructure),
        ({"kind": "kropina", "dimension": 2, "b": ["1", "0"]}, KropinaStructure),
        ({"kind": "expression", "dimension": 2, "text": "sqrt(y1^2 + 2*y2^2)"}, ExpressionStructure),
    ])
    def test_factory(self, data, expected):
        structure = StructureFactory.create(StructureSpec.from_dict(data))
        assert isinstance(structure, expected)
        assert structure.describe()["kind"] == data["kind"]


class TestFiberDirections:

    @pytest.mark.parametrize("dimension", [2, 3, 4])
    def test_unit_and_deterministic(self, dimension):
        directions = fiber_directions(dimension, 10)
        assert directions.shape == (10, dimension)
        np.testing.assert_allclose(np.linalg.norm(directions, axis=1), 1.0)
        np.testing.assert_array_equal(directions, fiber_directions(dimension, 10))

    def test_unsupported_dimension(self):
        with pytest.raises(ArgumentError):
            fiber_directions(5)

    def test_grid_size(self):
        assert len(default_validation_grid(2)) == 9 * 8 * 3


class TestAxiomChecks:
    """Однородность, положительность, тождество Эйлера, выпуклость"""

    def test_randers_passes_all(self, randers, grid2):
        for check in (check_homogeneity, check_positivity, check_euler_identity, check_strong_convexity):
            report = check(randers, grid2)
            assert report.passed, report.failures
            assert report.checked == len(grid2)

    def test_curved_randers_passes_all(self, curved_randers, grid2):
        for check in (check_homogeneity, check_positivity, check_euler_identity, check_strong_convexity):
            assert check(curved_randers, grid2).passed

    def test_homogeneity_detects_quadratic(self, grid2):
        report = check_homogeneity(ExpressionStructure("y1^2 + y2^2", 2), grid2)
        assert not report.passed
        assert report.max_residual > 0.1

    def test_homogeneity_rejects_nonpositive_lambda(self, randers, grid2):
        with pytest.raises(ArgumentError):
            check_homogeneity(randers, grid2, lambdas=(0.0, 2.0))

    def test_convexity_detects_linear(self, grid2):
        structure = ExpressionStructure("y1 + y2", 2)
        assert not check_strong_convexity(structure, grid2).passed
        assert not check_positivity(structure, grid2).passed

    def test_kropina_rejects_points_outside_domain(self, grid2):
        report = check_positivity(make_kropina(None, ["1", "0"]), grid2)
        assert report.rejected
        assert report.checked + len(report.rejected) == len(grid2)
        assert report.passed
