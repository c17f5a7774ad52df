from functools import lru_cache
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as hst

from conftest import evaluator
from bergman_dpp.sampler import (
    PointConfiguration,
    SamplerError,
    build_discrete,
    coarse_polar_sites,
    discrete_from_scheme,
    discrete_oracle,
    joint_density,
    log_joint_density,
    sample,
    sample_batch,
    sampling_sites,
)


def random_config(rng, N, radius=1.2, n=1):
    r = radius * np.sqrt(rng.random((N, n)))
    return r * np.exp(2j * np.pi * rng.random((N, n)))


@lru_cache(maxsize=None)
def _dpp(name, k):
    return discrete_from_scheme(evaluator(name, k))


@given(hst.sampled_from([1, 2, 4, 8, 16]), hst.sampled_from(["quadratic", "radial-poly", "composite"]), hst.integers(0, 10**6))
def test_density_routes_agree(k, name, seed):
    # configurations drawn from the process itself; relative density error = abs log error
    B = evaluator(name, k)
    x = sample(_dpp(name, k), seed).points
    a = log_joint_density(B, x, "kernel")
    assert log_joint_density(B, x, "slater") == pytest.approx(a, abs=1e-10)
    assert log_joint_density(B, x, "vandermonde") == pytest.approx(a, abs=1e-10)


@given(hst.sampled_from([4, 8, 16]), hst.integers(0, 10**6))
def test_section_routes_agree_on_uniform_points(k, seed):
    # the kernel route squares the condition number of the section matrix, so
    # clustered uniform points are only compared between the two section routes
    B = evaluator("radial-poly", k)
    x = random_config(np.random.default_rng(seed), B.N)
    a = log_joint_density(B, x, "slater")
    assert log_joint_density(B, x, "vandermonde") == pytest.approx(a, abs=1e-10 * max(1, abs(a)))


def test_density_n2_routes_agree():
    B = evaluator("quadratic", 3, 2)
    x = random_config(np.random.default_rng(0), B.N, 1.0, 2)
    assert log_joint_density(B, x, "slater") == pytest.approx(log_joint_density(B, x, "kernel"), rel=1e-10)


@pytest.mark.parametrize("route", ["kernel", "slater", "vandermonde"])
def test_coincident_points_have_zero_density(route):
    B = evaluator("quadratic", 4)
    x = random_config(np.random.default_rng(1), B.N)
    x[1] = x[0]
    assert log_joint_density(B, x, route) == -np.inf
    assert joint_density(B, x, route) == 0.0


def test_density_permutation_symmetric():
    B = evaluator("radial-poly", 6)
    rng = np.random.default_rng(2)
    x = random_config(rng, B.N)
    p = rng.permutation(B.N)
    assert log_joint_density(B, x[p]) == pytest.approx(log_joint_density(B, x), rel=1e-12)


def test_wrong_size_rejected():
    B = evaluator("quadratic", 4)
    with pytest.raises(SamplerError):
        log_joint_density(B, np.zeros((3, 1), complex))
    with pytest.raises(SamplerError):
        PointConfiguration(np.zeros((3, 1), complex), 0, 4, 1)


@pytest.fixture(scope="module")
def dpp8():
    return discrete_from_scheme(evaluator("quadratic", 8))


def test_discrete_is_projection(dpp8):
    assert dpp8.raw_spectrum_defect < 1e-10
    assert np.allclose(dpp8.spectrum(), 1.0, atol=1e-12)
    assert np.sum(dpp8.inclusion_probabilities) == pytest.approx(dpp8.N, abs=1e-10)


def test_inclusion_matches_density(dpp8):
    B = evaluator("quadratic", 8)
    expected = B.rho1(dpp8.sites) * dpp8.cell_weights
    assert np.allclose(dpp8.inclusion_probabilities, expected, rtol=1e-8, atol=1e-15)


def test_draw_size_and_determinism(dpp8):
    cfg = sample(dpp8, seed=5, replicate=3)
    assert cfg.points.shape == (dpp8.N, 1)
    assert len(set(cfg.sites.tolist())) == dpp8.N
    again = sample(dpp8, seed=5, replicate=3)
    assert np.array_equal(cfg.sites, again.sites)
    other = sample(dpp8, seed=5, replicate=4)
    assert not np.array_equal(np.sort(cfg.sites), np.sort(other.sites))


def test_batch_independent_of_workers(dpp8):
    a = sample_batch(dpp8, 11, 6, workers=1)
    b = sample_batch(dpp8, 11, 6, workers=3)
    assert np.array_equal(a, b)
    # replicate keys do not depend on the batch split
    c = sample_batch(dpp8, 11, 3, start=3)
    assert np.array_equal(a[3:], c)


def test_unrenormalized_coarse_sites_rejected():
    B = evaluator("quadratic", 8)
    s, w = coarse_polar_sites(2.0, 3, 5)
    with pytest.raises(SamplerError):
        build_discrete(B, s, w, renormalize=False)


def test_tiny_instance_total_variation():
    B = evaluator("quadratic", 1)
    s, w = coarse_polar_sites(1.5, 2, 3)
    dpp = discrete_oracle(B, s, w)
    law = dpp.subset_law()
    assert sum(law.values()) == pytest.approx(1.0, abs=1e-12)
    R = 20000
    draws = sample_batch(dpp, 123, R)
    counts = {}
    for row in draws:
        key = tuple(sorted(row.tolist()))
        counts[key] = counts.get(key, 0) + 1
    tv = 0.5 * sum(abs(counts.get(S, 0) / R - p) for S, p in law.items())
    # sampling noise alone is about 0.01 for 15 subsets at this size
    assert tv < 0.03


def test_pair_minors_negatively_correlated():
    B = evaluator("quadratic", 2)
    s, w = coarse_polar_sites(1.5, 3, 4)
    dpp = discrete_oracle(B, s, w)
    p = dpp.inclusion_probabilities
    for i, j in combinations(range(dpp.M), 2):
        assert dpp.minor([i, j]) <= p[i] * p[j] + 1e-14
    assert np.allclose([dpp.minor([i]) for i in range(dpp.M)], p)


def test_sampling_n2():
    B = evaluator("quadratic", 2, 2)
    pts, wts = sampling_sites(B)
    assert pts.shape[1] == 2
    dpp = build_discrete(B, pts, wts)
    assert dpp.raw_spectrum_defect < 1e-6
    cfg = sample(dpp, seed=1)
    assert cfg.points.shape == (B.N, 2)
    assert len(set(cfg.sites.tolist())) == B.N
