"""
Тесты полных лифтов и производных Ли
"""
import numpy as np
import pytest

from errors import ArgumentError
from finsler_structure import TangentSample
from lie_calculus import (
    LieCalculus, VectorFieldOnM, bracket_check, complete_lift, flow_lie_derivative, interchange_residual,
    lie_derivative_connection, lie_derivative_lift_metric, lie_derivative_nonlinear_connection,
    lie_derivative_tensor, lift_form_lie_check, natural_field, nonlinear_connection_bracket_residual,
)
from lift_metric import LiftCoefficients, build_lift_metric
from tensor_engine import GeometryJets, TensorValue, lower

ORACLE = 1e-4


class TestVectorField:

    def test_rejects_fiber_dependence(self):
        with pytest.raises(ArgumentError, match="зависит от y"):
            VectorFieldOnM.from_strings(["y1", "0"], 2, name="bad")

    def test_rejects_wrong_component_count(self):
        with pytest.raises(ArgumentError):
            VectorFieldOnM.from_strings(["x1"], 2)

    def test_derivatives(self, z_squared):
        v, J, H = z_squared.derivatives((1.0, 2.0))
        np.testing.assert_allclose(v, [-3.0, 4.0])
        np.testing.assert_allclose(J, [[2.0, -4.0], [4.0, 2.0]])
        np.testing.assert_allclose(H[0], [[2.0, 0.0], [0.0, -2.0]])
        np.testing.assert_allclose(H[1], [[0.0, 2.0], [2.0, 0.0]])

    def test_linear_combination(self, rotation, dilation):
        combined = rotation + dilation.scaled(2.0)
        np.testing.assert_allclose(combined.evaluate((1.0, 1.0)), [1.0, 3.0])
        assert combined.dimension == 2

    def test_dimension_must_match_structure(self, euclidean3, rotation):
        with pytest.raises(ArgumentError):
            LieCalculus(euclidean3, rotation, TangentSample((0.0, 0.0, 0.0), (1.0, 0.0, 0.0)))


class TestCompleteLift:

    def test_euclidean_rotation(self, euclidean2, rotation, sample):
        lift = complete_lift(euclidean2, rotation, sample)
        np.testing.assert_allclose(lift.horizontal, [0.4, 0.3])
        np.testing.assert_allclose(lift.vertical, [-0.6, 0.8])

    def test_adapted_components_match_natural(self, polar, z_squared):
        # X^c = (v, J y) в (∂, ∂̇); в (δ, ∂̇) вертикальная часть сдвигается на N v
        sample = TangentSample((1.5, 0.5), (0.3, -0.7))
        lift = complete_lift(polar, z_squared, sample)
        X, _ = natural_field(z_squared, sample)
        N = GeometryJets(polar, sample, 3).N.value
        np.testing.assert_allclose(lift.horizontal, X[:2])
        np.testing.assert_allclose(lift.vertical, X[2:] + N @ X[:2], atol=1e-12)


class TestLieDerivatives:

    def test_lie_of_y_vanishes(self, curved_randers, z_squared, sample):
        value = lie_derivative_tensor(curved_randers, z_squared, sample, "y")
        np.testing.assert_allclose(value.data, 0.0, atol=1e-12)

    @pytest.mark.parametrize("field_name, factor", [("rotation", 0.0), ("translation", 0.0), ("dilation", 2.0)])
    def test_euclidean_metric(self, euclidean2, sample, field_name, factor, request):
        V = request.getfixturevalue(field_name)
        value = lie_derivative_tensor(euclidean2, V, sample, "g")
        np.testing.assert_allclose(value.data, factor * np.eye(2), atol=1e-12)

    def test_dilation_is_homothety_of_constant_randers(self, randers_constant, dilation, sample):
        calculus = LieCalculus(randers_constant, dilation, sample)
        np.testing.assert_allclose(calculus.lie_g.value, 2 * calculus.geometry.g.value, atol=1e-12)
        np.testing.assert_allclose(calculus.lie_N.value, 0.0, atol=1e-12)
        F2 = float(lie_derivative_tensor(randers_constant, dilation, sample, "F2").data)
        assert F2 == pytest.approx(2 * randers_constant.squared_value(sample))

    def test_rotation_breaks_randers_drift(self, randers, rotation, sample):
        value = lie_derivative_tensor(randers, rotation, sample, "g").data
        assert np.max(np.abs(value)) > 1e-3

    def test_nonlinear_connection_of_dilation(self, euclidean2, dilation, sample):
        np.testing.assert_allclose(lie_derivative_nonlinear_connection(euclidean2, dilation, sample).data, 0.0)

    def test_nonlinear_connection_second_derivatives(self, euclidean2, z_squared, sample):
        # N = 0, поэтому £N^h_i = ∂_i ∂_b v^h y^b
        _, _, H = z_squared.derivatives(sample.x)
        expected = np.einsum("hib,b->hi", H, sample.y)
        np.testing.assert_allclose(lie_derivative_nonlinear_connection(euclidean2, z_squared, sample).data,
                                   expected, atol=1e-12)

    def test_killing_fields_preserve_connection(self, euclidean2, rotation, sample):
        np.testing.assert_allclose(lie_derivative_connection(euclidean2, rotation, sample).data, 0.0, atol=1e-12)
        calculus = LieCalculus(euclidean2, rotation, sample)
        np.testing.assert_allclose(calculus.connection_contraction(), 0.0, atol=1e-12)

    def test_constant_tensor_and_callable(self, euclidean2, rotation, sample):
        T = TensorValue(np.array([1.0, 0.0]), (lower("i"),), name="dx1")
        # £ dx^1 = ∂_i v^1 dx^i
        np.testing.assert_allclose(lie_derivative_tensor(euclidean2, rotation, sample, T).data, [0.0, -1.0])
        value = lie_derivative_tensor(euclidean2, rotation, sample, lambda xs, ys: xs[0] * ys[1], variances=())
        # X^c(x1 y2) = v^1 y2 + x1 (J y)^2 = -x2 y2 + x1 y1
        assert float(value.data) == pytest.approx(0.4 * 0.6 + 0.3 * 0.8)

    def test_unknown_name(self, euclidean2, rotation, sample):
        with pytest.raises(ArgumentError):
            lie_derivative_tensor(euclidean2, rotation, sample, "R")


class TestLiftMetric:

    @pytest.mark.parametrize("coeffs", [(2.0, 1.0, 1.0), (0.0, 1.0, 0.0), (1.0, 0.5, -2.0)])
    def test_two_assemblies_agree(self, curved_randers, z_squared, sample, coeffs):
        calculus = LieCalculus(curved_randers, z_squared, sample)
        lift = LiftCoefficients(*coeffs)
        by_blocks = calculus.lift_metric_lie(lift)
        np.testing.assert_allclose(by_blocks, calculus.lift_metric_lie_by_forms(lift), atol=1e-12)
        np.testing.assert_allclose(by_blocks, by_blocks.T, atol=1e-12)

    def test_dilation_scales_lift_metric(self, euclidean2, dilation, sample):
        coeffs = LiftCoefficients(2.0, 1.0, 1.0)
        value = lie_derivative_lift_metric(euclidean2, dilation, sample, coeffs).data
        np.testing.assert_allclose(value, 2 * build_lift_metric(np.eye(2), coeffs).matrix, atol=1e-12)

    @pytest.mark.parametrize("field_name", ["rotation", "z_squared"])
    def test_flow_oracle(self, curved_randers, field_name, request):
        V = request.getfixturevalue(field_name)
        sample = TangentSample((0.2, -0.3), (0.9, 0.4))
        report = lift_form_lie_check(curved_randers, V, sample, LiftCoefficients(1.0, 0.5, 2.0))
        assert set(report.residuals) == {"g1", "g2", "g3", "lift", "dx", "delta_y"}
        assert report.max_residual < ORACLE, report.residuals

    def test_flow_rank_is_checked(self, rotation, sample):
        with pytest.raises(ArgumentError):
            flow_lie_derivative(lambda s: np.zeros((2, 2, 2)), rotation, sample, covariant_rank=3)


class TestCommutators:

    def test_interchange_formula(self, curved_randers, z_squared, sample):
        np.testing.assert_allclose(interchange_residual(curved_randers, z_squared, sample).data, 0.0, atol=1e-9)

    def test_interchange_polar(self, polar, rotation):
        sample = TangentSample((1.5, 0.5), (0.3, -0.7))
        np.testing.assert_allclose(LieCalculus(polar, rotation, sample).interchange(), 0.0, atol=1e-9)

    def test_frame_brackets(self, curved_randers, sample):
        report = bracket_check(curved_randers, sample)
        assert report.max_residual < ORACLE, report.residuals

    @pytest.mark.parametrize("field_name", ["rotation", "z_squared", "dilation"])
    def test_nonlinear_connection_bracket(self, curved_randers, sample, field_name, request):
        V = request.getfixturevalue(field_name)
        assert nonlinear_connection_bracket_residual(curved_randers, V, sample) < ORACLE
