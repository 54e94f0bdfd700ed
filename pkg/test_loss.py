import numpy as np
import pytest

from conftest import make_tracklet, point_mass_rep
from symbolic_pooling.config import PoolingConfig
from symbolic_pooling.errors import InsufficientLabelsError, ShapeMismatchError, SingletonLabelError
from symbolic_pooling.loss import batch_hard_mine, mean_loss, symbolic_triplet_loss, triplet_loss
from symbolic_pooling.metric import rep_distance
from symbolic_pooling.symbolic import pool_tracklet
from symbolic_pooling.testkit import brute_force_mine, random_representation


@pytest.mark.parametrize(
    "d_ap, d_an, margin, expected",
    [
        (0.5, 0.9, 0.3, 0.0),
        (0.5, 0.6, 0.3, pytest.approx(0.2)),
        (0.7, 0.7, 0.3, 0.3),
        (2.0, 1.0, 0.3, pytest.approx(1.3)),
        (0.0, 0.0, 0.0, 0.0),
    ],
)
def test_triplet_loss_cases(d_ap, d_an, margin, expected):
    assert triplet_loss(d_ap, d_an, margin) == expected


def test_triplet_loss_default_margin():
    assert triplet_loss(1.0, 1.0) == 0.3


def test_triplet_loss_is_monotone():
    sweep = np.linspace(0.0, 3.0, 301)
    by_an = [triplet_loss(1.0, d) for d in sweep]
    by_ap = [triplet_loss(d, 1.0) for d in sweep]
    assert all(a >= b for a, b in zip(by_an, by_an[1:]))
    assert all(a <= b for a, b in zip(by_ap, by_ap[1:]))


def test_negative_equal_to_positive_costs_the_margin():
    rng = np.random.default_rng(20)
    a, p = random_representation(rng, 4, 16), random_representation(rng, 4, 16)
    assert symbolic_triplet_loss(a, p, p, margin=0.3) == 0.3


def test_anchor_equal_to_positive_with_far_negative():
    a = point_mass_rep([0.0, 0.0])
    n = point_mass_rep([1.0, 1.0])
    assert symbolic_triplet_loss(a, a, n, margin=0.3) == 0.0


def test_symbolic_loss_composes_distances():
    rng = np.random.default_rng(21)
    a, p, n = (random_representation(rng, 5, 32) for _ in range(3))
    expected = triplet_loss(rep_distance(a, p, "exact"), rep_distance(a, n, "exact"), 0.3)
    assert symbolic_triplet_loss(a, p, n, 0.3, "exact") == expected


def test_symbolic_loss_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        symbolic_triplet_loss(point_mass_rep([0.0]), point_mass_rep([0.0, 1.0]), point_mass_rep([0.0]))


def test_batch_hard_by_hand():
    # pairwise distances on the line: 1, 3, 7, 2, 6, 4 (all distinct)
    reps = [point_mass_rep([v]) for v in (0.0, 1.0, 3.0, 7.0)]
    triplets = batch_hard_mine(reps, ["a", "a", "b", "b"], margin=0.3, mode="exact")
    assert [(t.anchor, t.positive, t.negative) for t in triplets] == [(0, 1, 2), (1, 0, 2), (2, 3, 1), (3, 2, 1)]
    assert [t.loss for t in triplets] == pytest.approx([0.0, 0.0, 2.3, 0.0])
    assert (triplets[2].d_ap, triplets[2].d_an) == (4.0, 2.0)


def test_identical_batch_costs_the_margin_everywhere():
    rep = random_representation(np.random.default_rng(30), 3, 16)
    triplets = batch_hard_mine([rep] * 6, ["x", "x", "y", "y", "z", "z"], margin=0.3)
    assert [t.loss for t in triplets] == [0.3] * 6
    # ties go to the lowest index
    assert [(t.positive, t.negative) for t in triplets] == [(1, 2), (0, 2), (3, 0), (2, 0), (5, 0), (4, 0)]
    assert mean_loss(triplets) == pytest.approx(0.3)


@pytest.mark.parametrize("mode", ["exact", "sampled"])
def test_mining_matches_brute_force(mode):
    rng = np.random.default_rng(31)
    reps = [random_representation(rng, 4, 32) for _ in range(9)]
    labels = [f"id{i // 3}" for i in range(9)]
    mined = batch_hard_mine(reps, labels, 0.3, mode)
    oracle = brute_force_mine(reps, labels, 0.3, mode)
    assert [(t.anchor, t.positive, t.negative) for t in mined] == [(t.anchor, t.positive, t.negative) for t in oracle]
    assert [t.loss for t in mined] == pytest.approx([t.loss for t in oracle], abs=1e-12)


def test_mined_losses_equal_recomputed_triplet_loss():
    rng = np.random.default_rng(32)
    reps = [random_representation(rng, 3, 16) for _ in range(8)]
    labels = ["a", "b"] * 4
    for t in batch_hard_mine(reps, labels, 0.5, "exact"):
        assert t.loss == symbolic_triplet_loss(reps[t.anchor], reps[t.positive], reps[t.negative], 0.5, "exact")


def test_mining_selection_survives_positive_scaling():
    rng = np.random.default_rng(33)
    data = [rng.normal(size=(20, 3)) * rng.uniform(0.5, 2.0) for _ in range(6)]
    labels = ["a", "a", "b", "b", "c", "c"]
    cfg = PoolingConfig(bins=4, t_samples=16)

    def mine(scale):
        reps = [pool_tracklet(make_tracklet(d * scale), cfg) for d in data]
        return batch_hard_mine(reps, labels, 0.3, "exact")

    base, scaled = mine(1.0), mine(2.5)
    assert [(t.positive, t.negative) for t in base] == [(t.positive, t.negative) for t in scaled]
    for b, s in zip(base, scaled):
        assert s.d_ap == pytest.approx(2.5 * b.d_ap, rel=1e-9)
        assert s.d_an == pytest.approx(2.5 * b.d_an, rel=1e-9)


def test_mining_label_errors():
    reps = [point_mass_rep([float(i)]) for i in range(4)]
    with pytest.raises(InsufficientLabelsError):
        batch_hard_mine(reps, ["a"] * 4)
    with pytest.raises(SingletonLabelError) as err:
        batch_hard_mine(reps, ["a", "a", "b", "c"])
    assert err.value.label == "b"
    with pytest.raises(SingletonLabelError):
        brute_force_mine(reps, ["a", "a", "b", "c"])
    with pytest.raises(ShapeMismatchError):
        batch_hard_mine(reps, ["a", "a", "b"])
