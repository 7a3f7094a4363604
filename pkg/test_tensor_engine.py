"""
Тесты тензорного движка: метрика, спрей, связность Картана, кривизна
"""
import numpy as np
import pytest

from errors import ArgumentError, SingularMetricError
from finsler_structure import ExpressionStructure, TangentSample
from tensor_engine import (
    LOWER, TensorValue, GeometryJets, cartan_connection, cartan_tensor, delta_derivative,
    fundamental_tensor, h_covariant_derivative, hh_curvature, jet_identities, lower,
    nonlinear_connection, snapshot, snapshot_identities, spray_coefficients, v_covariant_derivative,
)

POLAR_SAMPLE = TangentSample((2.0, 0.0), (1.0, 1.0))


def _assert_identities(structure, sample, tolerance=1e-8):
    geometry = GeometryJets(structure, sample)
    residuals = snapshot_identities(geometry.snapshot())
    residuals.update(jet_identities(geometry))
    failed = {name: value for name, value in residuals.items() if value > tolerance}
    assert not failed, failed


class TestPolarCoordinates:
    """Плоская метрика dr² + r² dθ²: известные символы Кристоффеля"""

    def test_fundamental_tensor(self, polar):
        g = fundamental_tensor(polar, POLAR_SAMPLE)
        np.testing.assert_allclose(g.data, np.diag([1.0, 4.0]), atol=1e-12)
        assert g.variances == (LOWER, LOWER)

    def test_spray(self, polar):
        np.testing.assert_allclose(spray_coefficients(polar, POLAR_SAMPLE).data, [-1.0, 0.5], atol=1e-12)

    def test_nonlinear_connection(self, polar):
        N = nonlinear_connection(polar, POLAR_SAMPLE).data
        np.testing.assert_allclose(N, [[0.0, -2.0], [0.5, 0.5]], atol=1e-12)

    def test_connection_is_christoffel(self, polar):
        bundle = cartan_connection(polar, POLAR_SAMPLE)
        F = bundle.F_h.data
        assert F[0, 1, 1] == pytest.approx(0.5)
        assert F[1, 1, 0] == pytest.approx(0.5)
        assert F[1, 0, 1] == pytest.approx(-2.0)
        assert F[0, 0, 0] == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(bundle.C.data, 0.0, atol=1e-12)

    def test_curvature_vanishes(self, polar):
        curvature = hh_curvature(polar, POLAR_SAMPLE)
        assert curvature.R_k.shape == (2, 2, 2, 2)
        np.testing.assert_allclose(curvature.R_k.data, 0.0, atol=1e-10)
        np.testing.assert_allclose(curvature.R_h.data, 0.0, atol=1e-10)

    def test_identities(self, polar):
        _assert_identities(polar, POLAR_SAMPLE)


class TestRanders:

    def test_fundamental_tensor_closed_form(self, randers):
        # a = I, b = (0.5, 0), y = (1, 0): g = diag(F², F/α) при F = 1.5, α = 1
        g = fundamental_tensor(randers, TangentSample((0.0, 0.0), (1.0, 0.0))).data
        np.testing.assert_allclose(g, np.diag([2.25, 1.5]), atol=1e-12)

    def test_determinant_closed_form(self, randers, sample):
        # det g = (F/α)^(n+1) det a
        g = fundamental_tensor(randers, sample).data
        alpha = np.linalg.norm(sample.y)
        F = randers.value(sample)
        assert np.linalg.det(g) == pytest.approx((F / alpha) ** 3)

    def test_cartan_tensor_symmetric_and_orthogonal_to_y(self, randers, sample):
        C = cartan_tensor(randers, sample).data
        assert np.max(np.abs(C)) > 1e-3
        np.testing.assert_allclose(C, C.transpose(1, 0, 2), atol=1e-12)
        np.testing.assert_allclose(C, C.transpose(2, 1, 0), atol=1e-12)
        np.testing.assert_allclose(np.einsum("m,mij->ij", sample.y, C), 0.0, atol=1e-12)

    def test_constant_coefficients_are_flat(self, randers_constant, sample):
        snap = snapshot(randers_constant, sample)
        for name in ("G", "N", "F_h", "delta_g", "R_h", "R_k"):
            np.testing.assert_allclose(getattr(snap, name), 0.0, atol=1e-12)

    @pytest.mark.parametrize("y", [(0.8, 0.6), (-1.0, 0.3), (0.2, -1.5)])
    def test_curved_identities(self, curved_randers, y):
        sample = TangentSample((0.4, -0.7), y)
        _assert_identities(curved_randers, sample)
        assert np.max(np.abs(snapshot(curved_randers, sample).R_h)) > 1e-6

    def test_F_is_horizontally_constant(self, curved_randers, sample):
        np.testing.assert_allclose(delta_derivative(curved_randers, sample, "F").data, 0.0, atol=1e-12)

    def test_three_dimensional_identities(self):
        structure = ExpressionStructure("sqrt(y1^2 + (1 + x1^2)*y2^2 + y3^2) + 0.2*x2*y3", 3)
        _assert_identities(structure, TangentSample((0.3, 0.5, -0.2), (1.0, 0.4, -0.6)))


class TestCovariantDerivatives:

    def test_metric_is_parallel(self, curved_randers, sample):
        bundle = cartan_connection(curved_randers, sample)
        np.testing.assert_allclose(h_covariant_derivative(bundle, bundle.g).data, 0.0, atol=1e-10)
        np.testing.assert_allclose(v_covariant_derivative(bundle, bundle.g).data, 0.0, atol=1e-10)

    def test_constant_tensor_picks_up_connection(self, polar):
        bundle = cartan_connection(polar, POLAR_SAMPLE)
        T = TensorValue(data=np.array([1.0, 0.0]), signature=(lower("i"),), name="dr")
        result = h_covariant_derivative(bundle, T).data
        # ∇_j T_i = -T_m F_i^m_j
        np.testing.assert_allclose(result, -bundle.F_h.data[:, 0, :], atol=1e-12)

    def test_shape_must_match_dimension(self, polar):
        bundle = cartan_connection(polar, POLAR_SAMPLE)
        T = TensorValue(data=np.zeros(3), signature=(lower("i"),), name="bad")
        with pytest.raises(ArgumentError):
            h_covariant_derivative(bundle, T)


class TestErrors:

    def test_order_range(self, euclidean2, sample):
        with pytest.raises(ArgumentError):
            GeometryJets(euclidean2, sample, order=5)
        with pytest.raises(ArgumentError):
            GeometryJets(euclidean2, sample, order=2).N

    def test_singular_metric(self):
        structure = ExpressionStructure("y1 + y2", 2)
        with pytest.raises(SingularMetricError):
            spray_coefficients(structure, TangentSample((0.0, 0.0), (1.0, 0.5)))

    def test_unknown_delta_quantity(self, euclidean2, sample):
        with pytest.raises(ArgumentError):
            delta_derivative(euclidean2, sample, "K")
