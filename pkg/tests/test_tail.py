#!/usr/bin/env python3
"""Unit tests for the marginal transform and empirical scalings"""

import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pytest

from src.errors import DimensionError, EstimationError
from src.model import exact_scaling, random_model, simulate
from src.projections import MaxProjection
from src.tail import (
    EmpiricalScalings,
    empirical_moment,
    estimate_scaling,
    frechet_transform,
    polar,
    select_exceedances,
)


@pytest.fixture
def frechet_sample():
    model = random_model(4, seed=13, well_ordered=False)
    return frechet_transform(simulate(model, 20_000, seed=13))


def test_frechet_reference_column():
    result = frechet_transform(np.array([[5.0], [1.0], [9.0]]))
    assert np.allclose(result[:, 0], [1.2011, 0.8493, 1.8644], atol=1e-4)


def test_frechet_is_monotone_per_column():
    rng = np.random.default_rng(0)
    raw = rng.normal(size=(200, 3))
    result = frechet_transform(raw)
    for c in range(3):
        order = np.argsort(raw[:, c])
        assert np.all(np.diff(result[order, c]) > 0)


def test_frechet_ignores_monotone_distortion():
    rng = np.random.default_rng(1)
    raw = rng.normal(size=(100, 2))
    distorted = np.column_stack([np.exp(raw[:, 0]), raw[:, 1] ** 3])
    assert np.array_equal(frechet_transform(raw), frechet_transform(distorted))


def test_frechet_ties_share_value():
    result = frechet_transform(np.array([[1.0], [2.0], [2.0], [3.0]]))
    assert result[1, 0] == result[2, 0]
    expected = (-np.log(3 / 5)) ** -0.5
    assert result[1, 0] == pytest.approx(expected)


def test_frechet_rejects_bad_input():
    with pytest.raises(EstimationError):
        frechet_transform(np.array([[1.0, 2.0], [1.0, 3.0]]))
    with pytest.raises(EstimationError):
        frechet_transform(np.array([[1.0], [np.nan], [2.0]]))
    with pytest.raises(EstimationError):
        frechet_transform(np.array([[1.0, 2.0]]))
    with pytest.raises(DimensionError):
        frechet_transform(np.zeros((2, 2, 2)))


def test_polar_single_row():
    decomposition = polar(np.array([[3.0, 4.0, 12.0]]), [0, 1])
    assert decomposition.radii[0] == pytest.approx(5.0)
    assert np.allclose(decomposition.angles[0], [0.6, 0.8])
    assert decomposition.m == 2


def test_polar_single_coordinate():
    decomposition = polar(np.array([[2.0, 1.0], [0.5, 1.0]]), [0])
    assert np.allclose(decomposition.radii, [2.0, 0.5])
    assert np.allclose(decomposition.angles, 1.0)


def test_polar_reconstructs_rows():
    X = np.random.default_rng(2).uniform(0.1, 5.0, size=(50, 3))
    decomposition = polar(X, [0, 1, 2])
    for sample, row in zip(decomposition, X):
        assert np.allclose(sample.reconstruct(), row)
        assert np.linalg.norm(sample.omega) == pytest.approx(1.0)


def test_polar_drops_zero_rows():
    X = np.array([[0.0, 0.0, 1.0], [1.0, 1.0, 1.0]])
    decomposition = polar(X, [0, 1])
    assert len(decomposition) == 1
    assert decomposition.zero_rows == 1
    assert decomposition.rows.tolist() == [1]


def test_polar_rejects_bad_subset():
    with pytest.raises(DimensionError):
        polar(np.ones((3, 2)), [])
    with pytest.raises(DimensionError):
        polar(np.ones((3, 2)), [2])


def test_exceedances_break_ties_by_row():
    exceedances = select_exceedances(np.array([1.0, 3.0, 3.0, 2.0]), 2)
    assert exceedances.selected.tolist() == [1, 2]
    assert exceedances.threshold == 3.0
    assert select_exceedances(np.array([1.0, 3.0, 3.0, 2.0]), 1).selected.tolist() == [1]


def test_exceedance_count_bounds():
    with pytest.raises(EstimationError):
        select_exceedances(np.ones(3), 0)
    with pytest.raises(EstimationError):
        select_exceedances(np.ones(3), 4)


def test_moment_without_functional_is_mass(frechet_sample):
    decomposition = polar(frechet_sample, [0, 2, 3])
    assert empirical_moment(decomposition, 100) == pytest.approx(3.0)


def test_single_column_estimate_is_one():
    X = frechet_transform(np.random.default_rng(3).normal(size=(500, 1)))
    assert estimate_scaling(X, 50, MaxProjection.single(0)) == pytest.approx(1.0)


def test_estimate_rejects_large_k(frechet_sample):
    with pytest.raises(EstimationError):
        estimate_scaling(frechet_sample, len(frechet_sample) + 1, MaxProjection.of([0, 1]))
    with pytest.raises(EstimationError):
        EmpiricalScalings(frechet_sample, 0)


def test_estimate_invariant_to_row_permutation(frechet_sample):
    projection = MaxProjection.rescaled(0, 1, [2], 1.3)
    shuffled = frechet_sample[np.random.default_rng(4).permutation(len(frechet_sample))]
    assert estimate_scaling(shuffled, 200, projection) == pytest.approx(
        estimate_scaling(frechet_sample, 200, projection), abs=1e-12)


def test_unit_multiplier_collapses(frechet_sample):
    collapsed = estimate_scaling(frechet_sample, 200, MaxProjection.rescaled(0, 1, [2], 1.0))
    plain = estimate_scaling(frechet_sample, 200, MaxProjection.of([0, 1, 2]))
    assert collapsed == plain


def test_independent_full_set_near_dimension():
    X = frechet_transform(np.random.default_rng(5).pareto(2.0, size=(50_000, 3)))
    assert estimate_scaling(X, 100, MaxProjection.of(range(3))) == pytest.approx(3.0, abs=0.15)


def test_empirical_source_caches(frechet_sample):
    source = EmpiricalScalings(frechet_sample, 150)
    projection = MaxProjection.of([1, 3])
    first = source.scaling(projection)
    assert source.scaling(projection) == first
    report = source.scaling_report()
    assert report == [{"descriptor": "M{2,4}", "k": 150, "estimate": first}]
    assert source.with_k(300).k == 300


def test_estimates_track_exact_values(frechet_sample):
    model = random_model(4, seed=13, well_ordered=False)
    source = EmpiricalScalings(frechet_sample, 500)
    for projection in (MaxProjection.of([0, 1]), MaxProjection.rescaled(2, 0, [3], 1.3)):
        assert source.scaling(projection) == pytest.approx(exact_scaling(model, projection),
                                                           abs=0.25)


@pytest.mark.slow
def test_large_sample_consistency():
    model = random_model(5, seed=17, well_ordered=False)
    X = frechet_transform(simulate(model, 1_000_000, seed=17))
    for i in range(5):
        assert estimate_scaling(X, 10_000, MaxProjection.single(i)) == pytest.approx(1.0)
    projection = MaxProjection.rescaled(0, 1, [2, 3], 1.3)
    assert estimate_scaling(X, 10_000, projection) == pytest.approx(
        exact_scaling(model, projection), abs=0.05)



@pytest.mark.slow
def test_estimation_error_shrinks_with_sample_size():
    model = random_model(4, seed=23, well_ordered=False)
    projections = [
        MaxProjection.rescaled(0, 1, [2, 3], 1.3),
        MaxProjection.rescaled(2, 3, [], 1.3),
        MaxProjection.of([0, 1, 2, 3]),
    ]
    exact = [exact_scaling(model, p) for p in projections]
    sizes = [10_000, 100_000, 1_000_000]

    slopes, errors = [], []
    for seed in range(20):
        X = simulate(model, sizes[-1], seed=100 + seed)
        row = []
        for n in sizes:
            k = int(np.floor(n ** 0.7))
            row.append(max(abs(estimate_scaling(X[:n], k, p) - e) for p, e in zip(projections, exact)))
        errors.append(row)
        slopes.append(np.polyfit(np.log10(sizes), row, 1)[0])

    assert np.median(slopes) < 0
    medians = np.median(errors, axis=0)
    assert medians[-1] < medians[0]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
