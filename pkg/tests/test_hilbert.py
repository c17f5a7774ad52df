import math

import numpy as np
import pytest
from conftest import evaluator, fock_rho1, pts
from hypothesis import given
from hypothesis import strategies as hst

from bergman_dpp.hilbert import (
    BergmanEvaluator,
    ConditioningError,
    EnsembleSpec,
    GramMatrix,
    QuadratureError,
    bergman_kernel,
    build_quadrature,
    cutoff_radius,
    dimension,
    export_basis,
    gram_matrix,
    import_basis,
    integrate_out_residual,
    kernel_matrix,
    multi_indices,
    orthonormalize,
    rho1,
    rho2_connected,
    trace_identity,
    trace_on_nodes,
)
from bergman_dpp.weights import WeightError, catalog, fubini_study, quadratic, radial_poly

coord = hst.floats(-1.2, 1.2, allow_nan=False)


def test_dimension():
    assert dimension(1, 5) == 6
    assert dimension(2, 3) == 10
    assert dimension(1, 1) == 2
    assert dimension(2, 48) == 1225
    with pytest.raises(ValueError):
        dimension(2, 49)
    with pytest.raises(ValueError):
        dimension(3, 2)


def test_graded_lex_ordering():
    idx = multi_indices(2, 2)
    assert [tuple(r) for r in idx] == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def test_gram_examples():
    w = quadratic(1.0)
    G1 = gram_matrix(EnsembleSpec.create(w, 1)).entries
    assert np.allclose(G1, np.diag([np.pi, np.pi]), rtol=1e-13, atol=1e-15)
    G2 = gram_matrix(EnsembleSpec.create(w, 2)).entries
    assert np.allclose(G2, np.diag([np.pi / 2, np.pi / 4, np.pi / 4]), rtol=1e-13, atol=1e-15)


def test_gram_n2_moments():
    # int |z1|^{2a}|z2|^{2b} e^{-k|z|^2} = pi^2 a! b! / k^{a+b+2}
    k = 3
    G = gram_matrix(EnsembleSpec.create(quadratic(1.0, 2), k))
    for (a, b), ell in zip(multi_indices(2, k), G.log_diag):
        exact = 2 * math.log(math.pi) + math.lgamma(a + 1) + math.lgamma(b + 1) - (a + b + 2) * math.log(k)
        assert ell == pytest.approx(exact, abs=1e-12)


def test_quadrature_invariants():
    w = quadratic(1.0)
    for k in (4, 32, 128):
        q = build_quadrature(w, k)
        assert q.angular_nodes >= 4 * k + 8
        # tail envelope at R_cut is ~1e-18 of the maximum
        R = q.R_cut
        r = np.linspace(1e-6, R, 20001)
        f = 2 * k * np.log(r) - k * r**2
        assert f[-1] - f.max() <= math.log(1e-18) + 1e-6
    with pytest.raises(QuadratureError):
        build_quadrature(w, 8, angular_nodes=10)


def test_orthonormalize_examples():
    B = orthonormalize(np.eye(3))
    assert np.allclose(B.transform, np.eye(3))
    B = orthonormalize(4 * np.eye(2))
    assert np.allclose(B.transform, 0.5 * np.eye(2))
    B = orthonormalize(np.diag([np.pi / 2, np.pi / 4, np.pi / 4]))
    assert np.allclose(np.diag(B.transform), [math.sqrt(2 / np.pi), 2 / math.sqrt(np.pi), 2 / math.sqrt(np.pi)])
    # diagonal pre-scaling absorbs any spread of magnitudes
    assert np.allclose(orthonormalize(np.diag([1.0, 1e-14])).transform, np.diag([1.0, 1e7]))


def test_ill_conditioned_and_indefinite_rejected():
    G = np.array([[1.0, 1.0 - 1e-15], [1.0 - 1e-15, 1.0]])
    with pytest.raises(ConditioningError):
        orthonormalize(G)
    with pytest.raises(ValueError):
        GramMatrix.from_array(np.array([[1.0, 2.0], [0.0, 1.0]]))


@given(hst.integers(1, 6), hst.integers(0, 2**31 - 1))
def test_orthonormalize_random_hermitian(N, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    G = A @ A.conj().T + N * np.eye(N)
    B = orthonormalize(G)
    L = B.transform
    assert np.allclose(np.triu(L, 1), 0)
    assert np.allclose(L @ G @ L.conj().T, np.eye(N), atol=1e-10)


def test_kernel_examples(oracles):
    B4 = evaluator("quadratic:1", 4)
    assert bergman_kernel(B4, np.array([0j]), np.array([0j])) == pytest.approx(4 / np.pi)
    B1 = evaluator("quadratic:1", 1)
    assert bergman_kernel(B1, np.array([0j]), np.array([0j])) == pytest.approx(1 / np.pi)
    B8 = evaluator("quadratic:1", 8)
    assert rho1(B8, np.array([0j])) == pytest.approx(8 / np.pi, rel=1e-13)
    B2 = evaluator("quadratic:1", 2)
    for t in (0.1, 0.5, 1.3):
        z = math.sqrt(t)
        assert rho1(B2, np.array([z + 0j])) == pytest.approx(2 / np.pi * math.exp(-2 * t) * (1 + 2 * t + 2 * t * t), rel=1e-13)
    for row in oracles["fock_kernel"]:
        B = evaluator("quadratic:1", row["k"])
        z, w = complex(*row["z"]), complex(*row["w"])
        K = B.kernel(pts(z), pts(w))[0, 0]
        Kx, Ky = B.kernel(pts(z), pts(z))[0, 0].real, B.kernel(pts(w), pts(w))[0, 0].real
        ref = complex(row["re"], row["im"])
        assert abs(K - ref) <= 1e-8 * math.sqrt(Kx * Ky)
        assert abs(B.weighted_kernel(pts(z), pts(w))[0, 0]) == pytest.approx(row["weighted_abs"], rel=1e-8, abs=1e-300)


def test_rho1_matches_frozen_oracle(oracles):
    for row in oracles["fock_rho1"]:
        B = evaluator("quadratic:1", row["k"])
        val = rho1(B, np.array([complex(*row["z"])]))
        assert val == pytest.approx(row["value"], rel=1e-8, abs=1e-300)


def test_rho2_examples():
    B = evaluator("quadratic:1", 8)
    x = np.array([[0.3 - 0.2j]])
    assert rho2_connected(B, x, x) == pytest.approx(-rho1(B, x[0]) ** 2, rel=1e-14)
    K = 8 / np.pi  # K_8(0, y) = k/pi for every y
    assert rho2_connected(B, np.array([[0j]]), np.array([[0.5 + 0j]])) == pytest.approx(-(K**2) * math.exp(-8 * 0.25), rel=1e-12)
    rng = np.random.default_rng(3)
    X = rng.normal(size=(20, 1)) + 1j * rng.normal(size=(20, 1))
    assert np.all(B.rho2_connected(X, X) <= 0)


@given(coord, coord, coord, coord)
def test_kernel_hermitian(a, b, c, d):
    B = evaluator("radial-poly", 16)
    x, y = pts(complex(a, b)), pts(complex(c, d))
    assert B.kernel(x, y)[0, 0] == pytest.approx(np.conj(B.kernel(y, x)[0, 0]), rel=1e-12, abs=1e-300)


def test_kernel_matrix_psd():
    B = evaluator("composite", 16)
    rng = np.random.default_rng(7)
    X = 0.8 * (rng.normal(size=(40, 1)) + 1j * rng.normal(size=(40, 1)))
    Km = kernel_matrix(B, X)
    assert np.allclose(Km, Km.conj().T)
    assert np.linalg.eigvalsh(Km).min() >= -1e-10


def test_extremal_property():
    B = evaluator("radial-poly", 12)
    rng = np.random.default_rng(11)
    X = rng.normal(size=(30, 1)) + 1j * rng.normal(size=(30, 1))
    S = B.sections(X)
    rho = B.rho1(X)
    for _ in range(20):
        c = rng.normal(size=B.N) + 1j * rng.normal(size=B.N)
        c /= np.linalg.norm(c)
        assert np.all(np.abs(S @ c) ** 2 <= rho * (1 + 1e-8))


def test_integrate_out_residual():
    w = quadratic(1.0)
    B = evaluator("quadratic:1", 8)
    assert integrate_out_residual(B, np.array([[0j]])) <= 1e-8
    far = np.array([[2.5 + 0j]])  # |x|^2 > 4
    assert integrate_out_residual(B, far) <= 1e-8
    assert rho1(B, far[0]) < 1e-8
    Bh = BergmanEvaluator.build(w, 8, R_cut=B.spec.quadrature.R_cut / 2)
    res = integrate_out_residual(Bh, np.array([[0j], [0.5], [1.0]]))
    assert np.max(res) > 1e4 * 1e-10
    with pytest.raises(QuadratureError):
        integrate_out_residual(Bh, np.array([[1.0 + 0j]]), flag_factor=100)


@pytest.mark.parametrize("n,k", [(1, 8), (1, 32), (1, 64), (2, 8), (2, 16)])
def test_trace_identity_catalog(n, k):
    for name in catalog(n):
        B = evaluator(name, k, n)
        assert trace_identity(B) == pytest.approx(B.N, rel=1e-10)
        # the n=2 tensor grid has millions of nodes; the composite bump's kink is off the radial panels
        if n == 1 and name != "composite":
            assert trace_on_nodes(B) == pytest.approx(B.N, rel=1e-10)


def test_growth_required():
    with pytest.raises(WeightError):
        EnsembleSpec.create(fubini_study(1.0), 4)


def test_cutoff_radius_grows_like_unit_disk():
    R = [cutoff_radius(quadratic(1.0), k) for k in (16, 64, 256)]
    assert R[0] > R[1] > R[2] > 1.0


def test_export_import_round_trip():
    B = evaluator("radial-poly", 6)
    text = export_basis(B.basis)
    header, L = import_basis(text)
    assert header["k"] == 6 and header["N"] == 7
    assert np.array_equal(L, B.basis.transform)
    assert header["weight_function"].spec == radial_poly({2: 1.0, 4: 0.25}).spec
