import numpy as np
import pytest

from conftest import make_tracklet, point_mass_rep
from symbolic_pooling.core_types import FeatureHistogram, QuantileFunction, SymbolicRepresentation
from symbolic_pooling.errors import EmptySetError, ShapeMismatchError
from symbolic_pooling.metric import (
    avg_pool,
    cosine,
    crisp_distance_matrix,
    distance_matrix,
    euclidean,
    max_pool,
    rep_distance,
    w1_exact,
    w1_sampled,
)
from symbolic_pooling.testkit import oracle_w1_quadrature, random_histogram, random_representation


def eight_bin_histogram(rng):
    lo = rng.uniform(-2.0, 2.0)
    freqs = 0.5 / 8 + 0.5 * rng.dirichlet(np.ones(8))
    return FeatureHistogram(lo=lo, hi=lo + rng.uniform(0.5, 3.0), freqs=freqs / freqs.sum())


# w1_exact

def test_w1_of_identical_functions_is_zero(four_values_histogram):
    q = QuantileFunction(four_values_histogram)
    assert w1_exact(q, q) == 0.0


def test_w1_between_point_masses():
    a = QuantileFunction(FeatureHistogram.point_mass(2.0))
    b = QuantileFunction(FeatureHistogram.point_mass(5.0))
    assert w1_exact(a, b) == 3.0


def test_w1_of_nested_uniforms(unit_uniform):
    wide = QuantileFunction(FeatureHistogram(lo=0.0, hi=2.0, freqs=[1.0]))
    assert w1_exact(unit_uniform, wide) == pytest.approx(0.5, abs=1e-15)


def test_w1_splits_at_sign_change():
    wide = QuantileFunction(FeatureHistogram(lo=0.0, hi=2.0, freqs=[1.0]))
    centre = QuantileFunction(FeatureHistogram.point_mass(1.0))
    assert w1_exact(wide, centre) == pytest.approx(0.5, abs=1e-15)


def test_w1_across_empty_bin():
    gapped = QuantileFunction(FeatureHistogram(lo=0.0, hi=3.0, freqs=[0.5, 0.0, 0.5]))
    mid = QuantileFunction(FeatureHistogram.point_mass(1.5))
    # quantile runs 0..1 then 2..3, always 0.5 to 1.5 away from 1.5
    assert w1_exact(gapped, mid) == pytest.approx(1.0, abs=1e-15)


def test_w1_matches_quadrature():
    rng = np.random.default_rng(3)
    a = QuantileFunction(eight_bin_histogram(rng))
    b = QuantileFunction(eight_bin_histogram(rng))
    assert abs(w1_exact(a, b) - oracle_w1_quadrature(a, b, 10**6)) <= 1e-8


# w1_sampled and rep_distance

def test_sampled_distance_of_identical_reps_is_zero():
    rep = random_representation(np.random.default_rng(0), features=3, t_samples=16)
    assert w1_sampled(rep, rep) == 0.0


@pytest.mark.parametrize("t_samples", [1, 4, 64])
def test_sampled_distance_between_shifted_point_masses(t_samples):
    a = point_mass_rep([0.0, -1.0, 2.5, 10.0], t_samples)
    b = point_mass_rep([1.0, 0.0, 3.5, 11.0], t_samples)
    assert w1_sampled(a, b) == 4.0


def test_sampled_distance_tracks_exact():
    rng = np.random.default_rng(11)
    a = random_representation(rng, features=8, t_samples=64)
    b = random_representation(rng, features=8, t_samples=64)
    exact = rep_distance(a, b, "exact")
    assert w1_sampled(a, b) == pytest.approx(exact, rel=0.02)


def test_sampled_distance_converges_with_resolution():
    rng = np.random.default_rng(17)
    a = random_representation(rng, features=8, t_samples=1024)
    b = random_representation(rng, features=8, t_samples=1024)
    assert rep_distance(a, b, "sampled") == pytest.approx(rep_distance(a, b, "exact"), rel=1e-3)


def test_single_feature_exact_distance_is_w1():
    rng = np.random.default_rng(4)
    qa, qb = QuantileFunction(random_histogram(rng)), QuantileFunction(random_histogram(rng))
    a = SymbolicRepresentation(per_feature=(qa,), t_samples=8)
    b = SymbolicRepresentation(per_feature=(qb,), t_samples=8)
    assert rep_distance(a, b, "exact") == w1_exact(qa, qb)


@pytest.mark.parametrize("mode", ["exact", "sampled"])
def test_identical_reps_are_at_zero(mode):
    rep = random_representation(np.random.default_rng(8), features=4, t_samples=32)
    assert rep_distance(rep, rep, mode) == 0.0


def test_shape_mismatches():
    a = point_mass_rep([0.0, 1.0], 8)
    with pytest.raises(ShapeMismatchError):
        rep_distance(a, point_mass_rep([0.0], 8))
    with pytest.raises(ShapeMismatchError):
        w1_sampled(a, point_mass_rep([0.0, 1.0], 16))
    # exact mode ignores T
    assert rep_distance(a, point_mass_rep([0.0, 1.0], 16), "exact") == 0.0


def test_unknown_mode():
    a = point_mass_rep([0.0], 8)
    with pytest.raises(ValueError):
        rep_distance(a, a, "fuzzy")


# distance_matrix

def test_single_pair_matrix():
    rep = random_representation(np.random.default_rng(1), features=2, t_samples=8)
    matrix = distance_matrix([rep], [rep], "sampled", 1)
    assert matrix.data.tolist() == [[0.0]]


@pytest.mark.parametrize("mode", ["exact", "sampled"])
def test_matrix_entries_are_pairwise_distances(mode):
    rng = np.random.default_rng(2)
    queries = [random_representation(rng, 3, 16, identity=f"q{i}") for i in range(2)]
    gallery = [random_representation(rng, 3, 16, identity=f"g{j}") for j in range(3)]
    matrix = distance_matrix(queries, gallery, mode, 1)
    assert (matrix.rows, matrix.cols) == (2, 3)
    assert matrix.query_ids == ("q0", "q1")
    for i, q in enumerate(queries):
        for j, g in enumerate(gallery):
            assert matrix.data[i, j] == rep_distance(q, g, mode)


def test_parallel_matrix_equals_serial():
    rng = np.random.default_rng(5)
    reps = [random_representation(rng, features=64, t_samples=64) for _ in range(400)]
    serial = distance_matrix(reps[:200], reps[200:], "sampled", 1)
    parallel = distance_matrix(reps[:200], reps[200:], "sampled", 4)
    assert np.array_equal(serial.data, parallel.data)


def test_parallel_exact_matrix_equals_serial():
    rng = np.random.default_rng(6)
    reps = [random_representation(rng, features=3, t_samples=8) for _ in range(20)]
    assert np.array_equal(
        distance_matrix(reps[:9], reps[9:], "exact", 1).data,
        distance_matrix(reps[:9], reps[9:], "exact", 3).data,
    )


def test_matrix_errors():
    rep = point_mass_rep([0.0, 1.0])
    with pytest.raises(EmptySetError):
        distance_matrix([], [rep])
    with pytest.raises(EmptySetError):
        distance_matrix([rep], [])
    with pytest.raises(ShapeMismatchError):
        distance_matrix([rep], [rep, point_mass_rep([0.0])])


def test_matrix_is_read_only():
    rep = point_mass_rep([0.0])
    with pytest.raises(ValueError):
        distance_matrix([rep], [rep]).data[0, 0] = 1.0


# Crisp baselines

def test_pooling_a_single_frame():
    t = make_tracklet([[1.0, -2.0, 3.0]])
    assert avg_pool(t).tolist() == [1.0, -2.0, 3.0]
    assert max_pool(t).tolist() == [1.0, -2.0, 3.0]


def test_pooling_a_column():
    t = make_tracklet([[0.0], [2.0]])
    assert avg_pool(t).tolist() == [1.0]
    assert max_pool(t).tolist() == [2.0]


def test_pooling_random_matrix():
    values = np.random.default_rng(9).normal(size=(10, 4))
    t = make_tracklet(values)
    assert avg_pool(t) == pytest.approx([sum(values[:, m]) / 10 for m in range(4)], abs=1e-12)
    assert max_pool(t).tolist() == [max(values[:, m]) for m in range(4)]


def test_euclidean():
    assert euclidean([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert euclidean([0.0, 0.0], [3.0, 4.0]) == 5.0
    with pytest.raises(ShapeMismatchError):
        euclidean([0.0], [0.0, 1.0])


def test_euclidean_random_pair():
    rng = np.random.default_rng(13)
    u, v = rng.normal(size=64), rng.normal(size=64)
    assert euclidean(u, v) == pytest.approx(sum((a - b) ** 2 for a, b in zip(u, v)) ** 0.5, rel=1e-12)


def test_cosine():
    assert cosine([1.0, 0.0], [0.0, 2.0]) == pytest.approx(1.0)
    assert cosine([1.0, 1.0], [2.0, 2.0]) == pytest.approx(0.0, abs=1e-12)
    assert cosine([0.0, 0.0], [1.0, 0.0]) == 1.0
    assert cosine([0.0, 0.0], [0.0, 0.0]) == 0.0


@pytest.mark.parametrize("metric, pairwise", [("euclidean", euclidean), ("cosine", cosine)])
def test_crisp_matrix_matches_pairwise(metric, pairwise):
    rng = np.random.default_rng(14)
    q, g = rng.normal(size=(5, 6)), rng.normal(size=(7, 6))
    g[3] = 0.0
    matrix = crisp_distance_matrix(q, g, metric, workers=2)
    expected = [[pairwise(u, v) for v in g] for u in q]
    assert matrix.data == pytest.approx(np.array(expected), abs=1e-12)


def test_crisp_matrix_errors():
    with pytest.raises(ShapeMismatchError):
        crisp_distance_matrix(np.ones((2, 3)), np.ones((2, 4)))
    with pytest.raises(ValueError):
        crisp_distance_matrix(np.ones((2, 3)), np.ones((2, 3)), "manhattan")
