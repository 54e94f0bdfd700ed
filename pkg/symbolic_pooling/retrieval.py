"""
Gallery ranking and retrieval evaluation (CMC and mAP).
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike

from .config import DistanceMode, EvalProtocol
from .core_types import RankedItem, RetrievalResult, SymbolicRepresentation
from .errors import EmptySetError, NoRelevantItemsError, RankExceedsGalleryError, ShapeMismatchError
from .metric import distance_matrix, rep_distance

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalReport:
    """CMC points, optional mAP, and the ranked list of every query"""

    cmc: Tuple[Tuple[int, float], ...]
    map: Optional[float]
    per_query: Tuple[RetrievalResult, ...]
    skipped_queries: int = 0

    def rate(self, rank: int) -> float:
        for k, value in self.cmc:
            if k == rank:
                return value
        raise KeyError(f"Rank {rank} not in report")

    def summary_frame(self) -> pd.DataFrame:
        """One-row table: R<k> columns plus mAP when computed"""
        row = {f"R{k}": rate for k, rate in self.cmc}
        if self.map is not None:
            row["mAP"] = self.map
        row["queries"] = len(self.per_query)
        row["skipped"] = self.skipped_queries
        return pd.DataFrame([row])


def rank_from_distances(
    query_id: str,
    distances: ArrayLike,
    gallery_ids: Sequence[str],
    keep: Optional[np.ndarray] = None,
) -> RetrievalResult:
    """
    Order gallery items by ascending distance, ties by ascending gallery index

    Args:
        keep: optional boolean mask of gallery items taking part in the ranking
    """
    distances = np.asarray(distances, dtype=np.float64)
    indices = np.arange(distances.size) if keep is None else np.flatnonzero(keep)
    order = indices[np.argsort(distances[indices], kind="stable")]
    ranked = tuple(RankedItem(int(j), gallery_ids[j], float(distances[j])) for j in order)
    relevant = sum(1 for item in ranked if item.identity == query_id)
    return RetrievalResult(query_id=query_id, ranked_gallery=ranked, relevant_count=relevant)


def rank_gallery(
    query: SymbolicRepresentation,
    gallery: Sequence[SymbolicRepresentation],
    gallery_ids: Optional[Sequence[str]] = None,
    mode: DistanceMode = "sampled",
) -> RetrievalResult:
    """
    Rank the gallery for one query by representation distance

    Raises:
        EmptySetError: empty gallery
        ShapeMismatchError: representations of different shapes
    """
    if not gallery:
        raise EmptySetError("Empty gallery set")
    gallery_ids = [rep.identity for rep in gallery] if gallery_ids is None else list(gallery_ids)
    if len(gallery_ids) != len(gallery):
        raise ShapeMismatchError(f"{len(gallery)} gallery items but {len(gallery_ids)} labels")
    distances = [rep_distance(query, item, mode) for item in gallery]
    return rank_from_distances(query.identity, distances, gallery_ids)


def cmc(results: Sequence[RetrievalResult], ranks: Sequence[int]) -> List[Tuple[int, float]]:
    """
    Fraction of queries whose first relevant item sits at position <= k

    Queries without any relevant item are left out of the denominator.

    Raises:
        RankExceedsGalleryError: a rank above the longest ranked list
    """
    gallery_size = max((len(r.ranked_gallery) for r in results), default=0)
    for k in ranks:
        if k < 1:
            raise ValueError(f"CMC ranks must be positive, got {k}")
        if k > gallery_size:
            raise RankExceedsGalleryError(k, gallery_size)

    first_hits = np.array([r.first_hit for r in results if r.first_hit is not None], dtype=np.int64)
    if first_hits.size == 0:
        logger.warning("No query has a relevant gallery item; CMC is zero")
        return [(int(k), 0.0) for k in ranks]
    return [(int(k), float(np.count_nonzero(first_hits <= k)) / first_hits.size) for k in ranks]


def average_precision(result: RetrievalResult) -> Fraction:
    """(1/R) * sum over relevant positions p of hits-so-far / p, as an exact fraction"""
    positions = np.flatnonzero(result.relevant_flags) + 1
    if positions.size == 0:
        raise NoRelevantItemsError(result.query_id)
    return sum((Fraction(hit, int(pos)) for hit, pos in enumerate(positions, start=1)), Fraction(0)) / positions.size


def mean_average_precision(results: Sequence[RetrievalResult]) -> float:
    """
    Raises:
        NoRelevantItemsError: a query has no relevant gallery item
    """
    if not results:
        raise EmptySetError("No retrieval results to average")
    return float(sum((average_precision(r) for r in results), Fraction(0)) / len(results))


def usable_ranks(ranks: Sequence[int], gallery_size: int) -> Tuple[int, ...]:
    """Drop CMC ranks the gallery cannot reach, with a warning"""
    kept = tuple(k for k in ranks if k <= gallery_size)
    dropped = [k for k in ranks if k > gallery_size]
    if dropped:
        logger.warning(f"Dropping CMC ranks {dropped}: gallery has {gallery_size} items")
    return kept


def evaluate_distances(
    distances: ArrayLike,
    query_ids: Sequence[str],
    gallery_ids: Sequence[str],
    protocol: EvalProtocol,
    query_cams: Optional[Sequence[Optional[str]]] = None,
    gallery_cams: Optional[Sequence[Optional[str]]] = None,
) -> EvalReport:
    """Rank every query row of a distance matrix and score the rankings"""
    distances = np.asarray(distances, dtype=np.float64)
    if distances.shape != (len(query_ids), len(gallery_ids)):
        raise ShapeMismatchError(
            f"Distance matrix {distances.shape} does not match {len(query_ids)} queries x {len(gallery_ids)} gallery"
        )

    results = []
    for i, query_id in enumerate(query_ids):
        keep = None
        if protocol.exclude_same_camera and query_cams is not None and gallery_cams is not None:
            keep = np.array([cam is None or cam != query_cams[i] for cam in gallery_cams], dtype=bool)
        results.append(rank_from_distances(query_id, distances[i], gallery_ids, keep))

    skipped = sum(1 for r in results if r.first_hit is None)
    if skipped:
        logger.warning(f"{skipped} queries have no relevant gallery item and are left out of CMC")

    gallery_size = max((len(r.ranked_gallery) for r in results), default=0)
    ranks = usable_ranks(protocol.cmc_ranks, gallery_size)
    cmc_points = tuple(cmc(results, ranks)) if ranks else ()
    map_value = mean_average_precision(results) if protocol.compute_map else None

    return EvalReport(cmc=cmc_points, map=map_value, per_query=tuple(results), skipped_queries=skipped)


def evaluate(
    queries: Sequence[SymbolicRepresentation],
    gallery: Sequence[SymbolicRepresentation],
    protocol: Optional[EvalProtocol] = None,
) -> EvalReport:
    """
    Distance matrix, per-query ranking, CMC and (when enabled) mAP for labeled
    representation sets; labels and cameras come from the representations
    """
    protocol = protocol or EvalProtocol()
    matrix = distance_matrix(queries, gallery, protocol.mode, protocol.workers)
    report = evaluate_distances(
        matrix.data,
        [rep.identity for rep in queries],
        [rep.identity for rep in gallery],
        protocol,
        [rep.camera for rep in queries],
        [rep.camera for rep in gallery],
    )
    logger.info(f"Evaluated {len(queries)} queries against {len(gallery)} gallery items ({protocol.mode} mode)")
    return report
