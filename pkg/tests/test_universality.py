import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as hst

from conftest import evaluator
from bergman_dpp.hilbert import BergmanEvaluator
from bergman_dpp.universality import (
    ScalingFrame,
    box_points,
    decay_fit,
    ginibre_kernel,
    ginibre_modulus,
    normal_matrix_rescale,
    scaling_compare,
    scaling_series,
    slope_ratio,
)
from bergman_dpp.weights import catalog, quadratic

cplx = hst.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False)


def test_ginibre_origin():
    assert ginibre_kernel([1.0], 0, 0) == pytest.approx(1 / math.pi)
    assert ginibre_kernel([2.0, 3.0], [0, 0], [0, 0]) == pytest.approx(6 / math.pi**2)
    with pytest.raises(ValueError):
        ginibre_kernel([0.0], 0, 0)


@given(cplx, cplx)
def test_ginibre_hermitian_and_modulus(z, w):
    g = ginibre_kernel([1.3], z, w)
    assert g == pytest.approx(np.conj(ginibre_kernel([1.3], w, z)), rel=1e-12)
    # the weighted modulus strips the Gaussian factors of both points
    weighted = abs(g) * math.exp(-1.3 * (abs(z) ** 2 + abs(w) ** 2) / 2)
    assert weighted == pytest.approx(float(ginibre_modulus(np.array([[1.3]]), [z], [w])), rel=1e-12)
    # connected 2-point at unit curvature
    two = float(ginibre_modulus(np.array([[1.0]]), [z], [w])) ** 2
    assert two == pytest.approx(math.exp(-abs(z - w) ** 2) / math.pi**2, rel=1e-12)


class _GinibreModel:
    """Evaluator stand-in whose weighted kernel is the scaled Ginibre modulus."""

    def __init__(self, H, center, k):
        self.H, self.center, self.k, self.n = H, center, k, H.shape[0]

    def weighted_kernel(self, X, Y):
        s = math.sqrt(self.k)
        a = s * (X - self.center)
        b = s * (Y - self.center)
        return self.k**self.n * ginibre_modulus(self.H, a[:, None, :], b[None, :, :])


@pytest.mark.parametrize("n", [1, 2])
def test_ginibre_self_consistency(n):
    H = np.diag(np.arange(1.0, n + 1))
    c = np.full(n, 0.1 + 0.2j)
    frame = ScalingFrame(c, H, 49)
    # zero up to rounding in the change of coordinates
    assert scaling_compare(_GinibreModel(H, c, 49), frame).sup_error <= 1e-14


def test_quadratic_bulk_scaling():
    B = evaluator("quadratic", 256)
    frame = ScalingFrame.create(B.weight, 0, 256)
    assert frame.in_bulk
    cmp = scaling_compare(B, frame)
    assert cmp.sup_error <= 0.02
    assert cmp.converging
    errs, mono = scaling_series(quadratic(1.0), 0.0, [64, 128, 256])
    assert mono and max(errs) <= 1e-10


def test_radial_poly_off_center_improves():
    errs, mono = scaling_series(catalog(1)["radial-poly"], 0.3, [32, 64, 128])
    assert mono
    assert errs[-1] < errs[0]


def test_outside_bulk_reported():
    B = evaluator("quadratic", 64)
    frame = ScalingFrame.create(B.weight, 1.5, 64)
    assert not frame.in_bulk
    cmp = scaling_compare(B, frame)
    assert not cmp.converging
    # the weighted kernel is negligible there, so the error is the model's peak 1/pi
    assert np.max(cmp.computed) < 1e-3
    assert cmp.sup_error == pytest.approx(1 / math.pi, abs=1e-3)


def test_gauge_invariance():
    w = catalog(1)["radial-poly"]
    B = BergmanEvaluator.build(w, 24)
    Bs = BergmanEvaluator.build(w.shifted(0.7), 24)
    P = 0.3 + box_points(1, 1.0, 5, 7) / 2
    a = np.abs(B.weighted_kernel(P, P))
    b = np.abs(Bs.weighted_kernel(P, P))
    assert np.allclose(a, b, rtol=1e-10, atol=1e-10 * np.max(a))


def test_normal_matrix_rescale():
    B = evaluator("quadratic", 256)
    res = normal_matrix_rescale(B, 0.3)
    assert np.allclose(res.diagonal, 1.0, atol=1e-12)
    assert res.rho_z0 == pytest.approx(256 / math.pi, rel=1e-10)
    assert res.sup_error_pi <= 1e-10
    other = normal_matrix_rescale(B, 0.4j)
    zero = normal_matrix_rescale(B, 0.0)
    assert abs(other.sup_error - zero.sup_error) <= 0.01
    with pytest.raises(ValueError):
        normal_matrix_rescale(B, 3.0)


def test_decay_fit_fock():
    f64 = decay_fit(evaluator("quadratic", 64), 0.0)
    assert f64.C is not None and f64.C <= 10
    # diagonal sample: k^-2 rho1(0)^2 = 1/pi^2
    assert f64.distances[0] == 0
    assert math.exp(f64.log_values[0]) == pytest.approx(1 / math.pi**2, rel=1e-10)
    assert np.all(f64.log_values <= f64.bound() + 1e-12)
    f256 = decay_fit(evaluator("quadratic", 256), 0.0)
    assert 1.6 <= slope_ratio(f64, f256) <= 2.4
