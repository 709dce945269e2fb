import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrlab import (
    DistortionPair,
    DistortionSample,
    ball,
    catalog_lookup,
    distortion_residual,
    fit_minimal_distortion,
    samples_from_mapping,
    verify_distortion,
)
from qrlab.catalog import scaled_mapping
from qrlab.seeding import rng_for


def grid_envelope_oracle(samples, k1_grid):
    """Brute force: K2*(K1) = max_i (b_i - K1 a_i), clamped at zero."""
    a = np.array([s.a for s in samples])
    b = np.array([s.b for s in samples])
    return np.maximum((b[:, None] - np.outer(a, k1_grid)).max(axis=0), 0.0)


def test_pair_validation():
    with pytest.raises(ValueError):
        DistortionPair(0.0, 0.0)
    with pytest.raises(ValueError):
        DistortionPair(-1.0, 0.0)
    with pytest.raises(ValueError):
        DistortionPair(1.0, -0.5)
    with pytest.raises(ValueError):
        DistortionPair(math.inf, 0.0)


def test_residual_examples():
    # stretch sample at |x| = 0.25: (a, b) = (2, 4); equality under (2, 0)
    assert distortion_residual(DistortionSample(a=2.0, b=4.0), DistortionPair(2.0, 0.0)) == 0.0
    assert distortion_residual(DistortionSample(a=1.0, b=1.0), DistortionPair(1.0, 0.0)) == 0.0
    assert distortion_residual(DistortionSample(a=1.0, b=1.0), DistortionPair(2.0, 5.0)) == -6.0


@settings(max_examples=60, derandomize=True, deadline=None)
@given(st.floats(0, 5, allow_nan=False), st.floats(0, 5, allow_nan=False),
       st.floats(0.1, 4, allow_nan=False), st.floats(0, 4, allow_nan=False),
       st.floats(0, 2, allow_nan=False), st.floats(0, 2, allow_nan=False))
def test_residual_monotone_dominance(a, b, k1, k2, dk1, dk2):
    sample = DistortionSample(a=a, b=b)
    weaker = DistortionPair(k1, k2)
    stronger = DistortionPair(k1 + dk1, k2 + dk2)
    assert distortion_residual(sample, stronger) <= distortion_residual(sample, weaker) + 1e-12


def test_verify_stretch_declared_pair():
    mapping = catalog_lookup("radial_stretch", {"alpha": 0.5})
    report = verify_distortion(mapping, ball([0, 0], 0.9), DistortionPair(2.0, 0.0),
                               sample_count=10_000, seed=7)
    assert report.passed
    assert report.max_residual <= 1e-9
    assert report.sign_consistent
    assert report.violation_fraction == 0.0


def test_verify_detects_undersized_k1():
    mapping = catalog_lookup("radial_stretch", {"alpha": 0.5})
    report = verify_distortion(mapping, ball([0, 0], 0.9), DistortionPair(1.9, 0.0),
                               sample_count=10_000, seed=7)
    assert not report.passed
    assert report.max_residual > 0.0


def test_verify_rank_deficient():
    mapping = catalog_lookup("rank_deficient")
    report = verify_distortion(mapping, mapping.domain, DistortionPair(1.0, 1.0),
                               sample_count=10_000, seed=7)
    assert report.passed
    assert report.max_residual <= 0.0
    assert report.sign_consistent  # J identically zero must not trip the verdict
    assert report.positive_jacobians == 0 and report.negative_jacobians == 0


def test_sample_count_validation():
    mapping = catalog_lookup("identity")
    with pytest.raises(ValueError):
        verify_distortion(mapping, mapping.domain, DistortionPair(1.0, 0.0), sample_count=0)


# -- frontier ---------------------------------------------------------------------


def test_frontier_worked_example():
    samples = [DistortionSample(a=1, b=2), DistortionSample(a=2, b=3),
               DistortionSample(a=0, b=1)]
    frontier = fit_minimal_distortion(samples)
    # oracle on a dense grid, then spot values
    grid = np.linspace(0.01, 5.0, 500)
    assert np.allclose(frontier.envelope_values(grid), grid_envelope_oracle(samples, grid))
    assert frontier.minimal_k2(0.5) == pytest.approx(2.0)
    assert frontier.minimal_k2(1.0) == pytest.approx(1.0)
    assert frontier.minimal_k2(4.0) == pytest.approx(1.0)
    # the flat sample (a=0, b=1) makes K2 < 1 infeasible
    assert frontier.minimal_k1(0.0) == math.inf
    assert frontier.minimal_k1(1.0) == pytest.approx(1.0)
    assert frontier.minimal_k1(2.0) == pytest.approx(0.5)


def test_frontier_single_identity_line():
    frontier = fit_minimal_distortion([DistortionSample(a=1.0, b=1.0)])
    assert frontier.minimal_k2(1.0) == 0.0
    assert frontier.minimal_k2(0.25) == pytest.approx(0.75)
    assert frontier.minimal_k1(0.0) == pytest.approx(1.0)


def test_frontier_empty_refused():
    with pytest.raises(ValueError):
        fit_minimal_distortion([])


def test_frontier_matches_grid_oracle_on_random_sets():
    rng = rng_for(7, "frontier_oracle")
    grid = np.linspace(5e-4, 5.0, 10_000)
    for _ in range(100):
        k = int(rng.integers(1, 11))
        samples = [DistortionSample(a=float(a), b=float(b))
                   for a, b in zip(rng.random(k) * 3, rng.random(k) * 3)]
        frontier = fit_minimal_distortion(samples)
        oracle = grid_envelope_oracle(samples, grid)
        assert np.abs(frontier.envelope_values(grid) - oracle).max() <= 5e-4
        # minimal K1 queries against a grid scan, where the grid can see the answer
        for k2 in (0.0, 0.5, 1.5):
            feasible = grid[oracle <= k2 + 1e-12]
            mine = frontier.minimal_k1(k2)
            if feasible.size and mine <= grid[-1]:
                assert abs(mine - feasible[0]) <= 5e-4


@settings(max_examples=50, derandomize=True, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 3, allow_nan=False),
                          st.floats(0, 3, allow_nan=False)),
                min_size=1, max_size=8),
       st.floats(0.05, 5, allow_nan=False))
def test_frontier_feasibility_property(pairs, k1):
    samples = [DistortionSample(a=a, b=b) for a, b in pairs]
    frontier = fit_minimal_distortion(samples)
    k2_min = frontier.minimal_k2(k1)
    pair = DistortionPair(k1, k2_min + 1e-12)
    for s in samples:
        assert distortion_residual(s, pair) <= 1e-9


@settings(max_examples=50, derandomize=True, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 3, allow_nan=False),
                          st.floats(0, 3, allow_nan=False)),
                min_size=1, max_size=8))
def test_frontier_convex_and_nonincreasing(pairs):
    samples = [DistortionSample(a=a, b=b) for a, b in pairs]
    frontier = fit_minimal_distortion(samples)
    grid = np.linspace(0.05, 6.0, 121)
    vals = frontier.envelope_values(grid)
    assert np.all(np.diff(vals) <= 1e-12)
    second = np.diff(vals, 2)
    assert np.all(second >= -1e-9)


def test_stretch_frontier_recovers_declared_pair():
    mapping = catalog_lookup("radial_stretch", {"alpha": 0.5})
    samples = samples_from_mapping(mapping, ball([0, 0], 0.9), 10_000, seed=7)
    frontier = fit_minimal_distortion(samples)
    assert frontier.minimal_k2(2.0) <= 1e-9
    assert frontier.minimal_k1(0.0) == pytest.approx(2.0, abs=1e-6)


def test_scale_covariance_of_fitted_k1():
    # f -> c f multiplies both |Df|^n and |J| by c^n, so the fitted minimal
    # K1 at K2 = 0 is invariant
    mapping = catalog_lookup("radial_stretch", {"alpha": 0.5})
    region = ball([0, 0], 0.9)
    base = fit_minimal_distortion(samples_from_mapping(mapping, region, 2000, seed=3))
    scaled = fit_minimal_distortion(
        samples_from_mapping(scaled_mapping(mapping, 2.5), region, 2000, seed=3)
    )
    assert base.minimal_k1(0.0) == pytest.approx(scaled.minimal_k1(0.0), rel=1e-9)


def test_contributing_samples_recorded():
    samples = [DistortionSample(a=1, b=2), DistortionSample(a=2, b=3),
               DistortionSample(a=0, b=1)]
    frontier = fit_minimal_distortion(samples)
    assert set(frontier.contributing_samples) <= {0, 1, 2}
    assert len(frontier.contributing_samples) >= 1
