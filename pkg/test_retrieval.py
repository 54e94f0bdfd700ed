from fractions import Fraction

import numpy as np
import pytest

from conftest import point_mass_rep
from symbolic_pooling.config import EvalProtocol
from symbolic_pooling.core_types import RankedItem, RetrievalResult, SymbolicRepresentation
from symbolic_pooling.errors import EmptySetError, NoRelevantItemsError, RankExceedsGalleryError
from symbolic_pooling.metric import distance_matrix
from symbolic_pooling.retrieval import (
    average_precision,
    cmc,
    evaluate,
    evaluate_distances,
    mean_average_precision,
    rank_from_distances,
    rank_gallery,
)
from symbolic_pooling.testkit import random_representation


def result_with_hits(query_id, positions, size):
    """Ranked list of `size` items with relevant items at the given 1-based positions"""
    ranked = tuple(
        RankedItem(k, query_id if k + 1 in positions else "other", float(k)) for k in range(size)
    )
    return RetrievalResult(query_id=query_id, ranked_gallery=ranked, relevant_count=len(positions))


def relabel(rep: SymbolicRepresentation, identity: str, camera=None) -> SymbolicRepresentation:
    return SymbolicRepresentation(per_feature=rep.per_feature, t_samples=rep.t_samples, identity=identity, camera=camera)


# rank_gallery

def test_exact_copy_ranks_first():
    rng = np.random.default_rng(40)
    query = random_representation(rng, 4, 16, identity="a")
    gallery = [random_representation(rng, 4, 16, identity="b") for _ in range(5)]
    gallery.insert(3, query)
    result = rank_gallery(query, gallery)
    assert result.ranked_gallery[0].index == 3
    assert result.ranked_gallery[0].distance == 0.0
    assert result.first_hit == 1


@pytest.mark.parametrize("mode", ["exact", "sampled"])
def test_point_mass_gallery_orders_by_offset(mode):
    values = [3.0, -1.0, 0.5, -2.0, 4.0]
    gallery = [point_mass_rep([c, c, c], 8, identity=f"g{j}") for j, c in enumerate(values)]
    result = rank_gallery(point_mass_rep([0.0, 0.0, 0.0], 8), gallery, mode=mode)
    assert [item.index for item in result.ranked_gallery] == [2, 1, 3, 0, 4]
    assert [item.distance for item in result.ranked_gallery] == [1.5, 3.0, 6.0, 9.0, 12.0]


def test_ranking_matches_full_sort():
    rng = np.random.default_rng(41)
    query = random_representation(rng, 6, 32)
    gallery = [random_representation(rng, 6, 32) for _ in range(10)]
    distances = [np.abs(query.sampled - g.sampled).sum() / 32 for g in gallery]
    result = rank_gallery(query, gallery, [f"g{j}" for j in range(10)])
    assert [item.index for item in result.ranked_gallery] == sorted(range(10), key=lambda j: distances[j])


def test_ties_break_by_gallery_index():
    result = rank_from_distances("a", [1.0, 0.5, 1.0, 0.5], ["a", "b", "a", "b"])
    assert [item.index for item in result.ranked_gallery] == [1, 3, 0, 2]
    assert result.relevant_count == 2


def test_empty_gallery():
    with pytest.raises(EmptySetError):
        rank_gallery(point_mass_rep([0.0]), [])


# cmc

def test_all_top_hits():
    results = [result_with_hits("a", {1}, 4), result_with_hits("b", {1, 2}, 4)]
    assert cmc(results, [1]) == [(1, 1.0)]


def test_first_hits_one_and_three():
    results = [result_with_hits("a", {1}, 3), result_with_hits("b", {3}, 3)]
    assert cmc(results, [1, 2, 3]) == [(1, 0.5), (2, 0.5), (3, 1.0)]


def test_rank_beyond_gallery():
    with pytest.raises(RankExceedsGalleryError) as err:
        cmc([result_with_hits("a", {1}, 3)], [5])
    assert (err.value.rank, err.value.gallery_size) == (5, 3)


def test_cmc_matches_first_hit_scan():
    rng = np.random.default_rng(43)
    results = []
    for q in range(50):
        labels = [f"id{v}" for v in rng.integers(0, 5, size=20)]
        results.append(rank_from_distances(f"id{q % 5}", rng.random(20), labels))

    scanned = []
    for r in results:
        hit = next((pos for pos, item in enumerate(r.ranked_gallery, start=1) if item.identity == r.query_id), None)
        scanned.append(hit)
    found = [h for h in scanned if h is not None]
    for k, rate in cmc(results, [1, 2, 5, 10, 20]):
        assert rate == sum(1 for h in found if h <= k) / len(found)


def test_cmc_is_monotone_and_reaches_one_at_gallery_size():
    rng = np.random.default_rng(44)
    labels = ["a", "b", "c"] * 4
    results = [rank_from_distances(labels[q], rng.random(12), labels) for q in range(12)]
    rates = [rate for _, rate in cmc(results, range(1, 13))]
    assert all(a <= b for a, b in zip(rates, rates[1:]))
    assert rates[-1] == 1.0


# average precision

def test_single_relevant_at_top():
    assert average_precision(result_with_hits("a", {1}, 1)) == 1
    assert mean_average_precision([result_with_hits("a", {1}, 5)]) == 1.0


def test_relevant_at_one_and_three():
    assert average_precision(result_with_hits("a", {1, 3}, 3)) == Fraction(5, 6)


def test_map_matches_direct_formula():
    rng = np.random.default_rng(47)
    results = []
    for q in range(20):
        labels = ["x" if v < 0.3 else "y" for v in rng.random(15)]
        labels[int(rng.integers(15))] = "x"
        results.append(rank_from_distances("x", rng.random(15), labels))

    def ap(result):
        hits, total = 0, 0.0
        for pos, item in enumerate(result.ranked_gallery, start=1):
            if item.identity == result.query_id:
                hits += 1
                total += hits / pos
        return total / hits

    assert mean_average_precision(results) == pytest.approx(sum(ap(r) for r in results) / 20, abs=1e-12)


def test_map_requires_relevant_items():
    with pytest.raises(NoRelevantItemsError) as err:
        mean_average_precision([result_with_hits("a", {1}, 3), result_with_hits("lost", set(), 3)])
    assert err.value.query_id == "lost"


# evaluate

def labeled_set(rng, identities, per_identity, features=4, t_samples=16, camera=None):
    reps = []
    for identity in identities:
        for _ in range(per_identity):
            reps.append(relabel(random_representation(rng, features, t_samples), identity, camera))
    return reps


def test_single_shot_protocol_has_no_map():
    rng = np.random.default_rng(50)
    gallery = labeled_set(rng, ["a", "b", "c"], 1)
    report = evaluate(gallery, gallery, EvalProtocol.single_shot(cmc_ranks=(1, 2)))
    assert report.map is None
    assert [k for k, _ in report.cmc] == [1, 2]


def test_self_retrieval_is_perfect():
    rng = np.random.default_rng(51)
    reps = labeled_set(rng, ["a", "b", "c", "d"], 1)
    report = evaluate(reps, reps, EvalProtocol(cmc_ranks=(1, 4), workers=1))
    assert report.rate(1) == 1.0
    assert report.map == 1.0


def test_ranks_beyond_gallery_are_dropped():
    rng = np.random.default_rng(52)
    reps = labeled_set(rng, ["a", "b"], 2)
    report = evaluate(reps, reps, EvalProtocol())
    assert [k for k, _ in report.cmc] == [1]


def test_same_camera_items_are_excluded():
    q = relabel(point_mass_rep([0.0]), "a", "cam1")
    twin = relabel(point_mass_rep([0.0]), "a", "cam1")
    far = relabel(point_mass_rep([5.0]), "a", "cam2")
    impostor = relabel(point_mass_rep([1.0]), "b", "cam2")

    kept = evaluate([q], [twin, far, impostor], EvalProtocol(cmc_ranks=(1,), workers=1))
    excluded = evaluate([q], [twin, far, impostor], EvalProtocol(cmc_ranks=(1,), exclude_same_camera=True, workers=1))
    assert kept.rate(1) == 1.0
    assert excluded.rate(1) == 0.0
    assert [item.index for item in excluded.per_query[0].ranked_gallery] == [2, 1]
    assert excluded.map == pytest.approx(0.5)


def test_queries_without_matches_are_counted():
    rng = np.random.default_rng(54)
    gallery = labeled_set(rng, ["a", "b"], 2)
    queries = labeled_set(rng, ["a", "z"], 1)
    report = evaluate(queries, gallery, EvalProtocol.single_shot(cmc_ranks=(1, 4)))
    assert report.skipped_queries == 1
    assert len(report.per_query) == 2
    with pytest.raises(NoRelevantItemsError):
        evaluate(queries, gallery, EvalProtocol.multi_shot(cmc_ranks=(1,)))


def test_report_equals_composed_operations():
    rng = np.random.default_rng(53)
    identities = [f"id{c}" for c in range(5)]
    queries = labeled_set(rng, identities, 2)
    gallery = labeled_set(rng, identities, 2)
    protocol = EvalProtocol(cmc_ranks=(1, 5, 10), workers=1)
    report = evaluate(queries, gallery, protocol)

    results = [rank_gallery(q, gallery) for q in queries]
    assert report.per_query == tuple(results)
    assert list(report.cmc) == cmc(results, [1, 5, 10])
    assert report.map == mean_average_precision(results)


def test_worker_count_does_not_change_report():
    rng = np.random.default_rng(55)
    identities = [f"id{c}" for c in range(4)]
    queries, gallery = labeled_set(rng, identities, 3), labeled_set(rng, identities, 3)
    serial = evaluate(queries, gallery, EvalProtocol(workers=1, cmc_ranks=(1, 5)))
    parallel = evaluate(queries, gallery, EvalProtocol(workers=4, cmc_ranks=(1, 5)))
    assert serial == parallel


def test_increasing_transform_keeps_ranking_and_scores():
    rng = np.random.default_rng(56)
    identities = [f"id{c}" for c in range(4)]
    queries, gallery = labeled_set(rng, identities, 2), labeled_set(rng, identities, 3)
    distances = distance_matrix(queries, gallery, "sampled", 1).data
    q_ids, g_ids = [r.identity for r in queries], [r.identity for r in gallery]
    protocol = EvalProtocol(cmc_ranks=(1, 3, 12), workers=1)

    base = evaluate_distances(distances, q_ids, g_ids, protocol)
    warped = evaluate_distances(np.exp(distances) + distances**3, q_ids, g_ids, protocol)
    assert base.cmc == warped.cmc
    assert base.map == warped.map
    for a, b in zip(base.per_query, warped.per_query):
        assert [i.index for i in a.ranked_gallery] == [i.index for i in b.ranked_gallery]


def test_summary_frame():
    rng = np.random.default_rng(57)
    reps = labeled_set(rng, ["a", "b", "c"], 2)
    frame = evaluate(reps, reps, EvalProtocol(cmc_ranks=(1, 5), workers=1)).summary_frame()
    assert list(frame.columns) == ["R1", "R5", "mAP", "queries", "skipped"]
    assert frame.loc[0, "queries"] == 6
