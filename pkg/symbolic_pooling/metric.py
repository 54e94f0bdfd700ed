"""
Wasserstein distances between symbolic representations, crisp pooling
baselines, and the batch distance-matrix kernel.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy.spatial.distance import cdist

from .config import DistanceMode, default_threads
from .core_types import QuantileFunction, SymbolicRepresentation, Tracklet, validate_tracklet
from .errors import EmptySetError, ShapeMismatchError

logger = logging.getLogger(__name__)

CrispMetric = Literal["euclidean", "cosine"]


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Q x G distances; row/col ids label the query and gallery items"""

    data: np.ndarray
    query_ids: Tuple[str, ...] = ()
    gallery_ids: Tuple[str, ...] = ()

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, copy=True)
        if data.ndim != 2:
            raise ShapeMismatchError(f"Distance matrix must be 2-D, got {data.ndim} dimensions")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "query_ids", tuple(self.query_ids))
        object.__setattr__(self, "gallery_ids", tuple(self.gallery_ids))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]


# Exact 1-D Wasserstein

def _linear_piece(q: QuantileFunction, mid: np.ndarray, at: np.ndarray) -> np.ndarray:
    """Evaluate, at `at`, the linear quantile piece that contains each `mid`"""
    h = q.histogram
    if h.is_point_mass:
        return np.full(at.shape, h.lo)
    l = np.clip(np.searchsorted(h.cum, mid, side="left"), 1, h.bin_count)
    left = h.edges[l - 1]
    width = h.edges[l] - left
    return left + width * (at - h.cum[l - 1]) / h.freqs[l - 1]


def w1_exact(a: QuantileFunction, b: QuantileFunction) -> float:
    """
    Integral over [0, 1] of |a^-1(t) - b^-1(t)|, in closed form

    Both quantile functions are linear between their cumulative weights, so on
    every segment of the merged breakpoints the difference is linear and its
    absolute value integrates exactly (splitting at the root on sign changes).
    """
    knots = np.union1d(np.clip(a.histogram.cum, 0.0, 1.0), np.clip(b.histogram.cum, 0.0, 1.0))
    knots = np.union1d(knots, [0.0, 1.0])
    t0, t1 = knots[:-1], knots[1:]
    mid = 0.5 * (t0 + t1)

    d0 = _linear_piece(a, mid, t0) - _linear_piece(b, mid, t0)
    d1 = _linear_piece(a, mid, t1) - _linear_piece(b, mid, t1)
    length = t1 - t0
    abs0, abs1 = np.abs(d0), np.abs(d1)

    same_sign = d0 * d1 >= 0
    total = abs0 + abs1
    crossing = np.divide(d0 * d0 + d1 * d1, total, out=np.zeros_like(total), where=total > 0)
    area = np.where(same_sign, 0.5 * length * total, 0.5 * length * crossing)
    return float(np.sum(area))


# Sampled distance and the L1 kernel

def _l1_rows(queries: np.ndarray, gallery: np.ndarray) -> np.ndarray:
    # every entry is computed independently, so results do not depend on blocking
    return cdist(queries, gallery, metric="cityblock")


def _check_pair(a: SymbolicRepresentation, b: SymbolicRepresentation, mode: DistanceMode) -> None:
    if a.feature_count != b.feature_count:
        raise ShapeMismatchError(f"Feature count mismatch: {a.feature_count} vs {b.feature_count}")
    if mode == "sampled" and a.t_samples != b.t_samples:
        raise ShapeMismatchError(f"Sampling resolution mismatch: T={a.t_samples} vs T={b.t_samples}")


def w1_sampled(a: SymbolicRepresentation, b: SymbolicRepresentation) -> float:
    """Sum over features of the midpoint-rule W1 estimate: L1 of the sampled vectors over T"""
    _check_pair(a, b, "sampled")
    return float(_l1_rows(a.sampled[None, :], b.sampled[None, :])[0, 0] / a.t_samples)


def rep_distance(a: SymbolicRepresentation, b: SymbolicRepresentation, mode: DistanceMode = "sampled") -> float:
    """Distance between two representations: exact per-feature W1 summed, or the sampled estimate"""
    _check_pair(a, b, mode)
    if mode == "exact":
        return float(np.sum([w1_exact(qa, qb) for qa, qb in zip(a.per_feature, b.per_feature)]))
    if mode == "sampled":
        return w1_sampled(a, b)
    raise ValueError(f"Unknown distance mode: {mode}")


def _row_blocks(rows: int, workers: int) -> List[np.ndarray]:
    blocks = np.array_split(np.arange(rows), min(rows, max(1, workers) * 4))
    return [block for block in blocks if block.size]


def _fill_rows(out: np.ndarray, fill: Callable[[np.ndarray], np.ndarray], workers: int) -> None:
    """Compute out[block] = fill(block) for row blocks, on a thread pool when workers > 1"""
    blocks = _row_blocks(out.shape[0], workers)
    if workers <= 1:
        for block in blocks:
            out[block] = fill(block)
        return

    def run(block: np.ndarray) -> None:
        out[block] = fill(block)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(run, blocks))


def _ids(reps: Sequence[SymbolicRepresentation]) -> Tuple[str, ...]:
    return tuple(rep.name or rep.identity for rep in reps)


def distance_matrix(
    queries: Sequence[SymbolicRepresentation],
    gallery: Sequence[SymbolicRepresentation],
    mode: DistanceMode = "sampled",
    workers: Optional[int] = None,
) -> DistanceMatrix:
    """
    All query/gallery distances

    Sampled mode stacks every representation's sampled vector once and runs
    the L1 kernel over row blocks; exact mode evaluates rep_distance per pair.
    Output is identical for any worker count.

    Raises:
        EmptySetError: no queries or no gallery items
        ShapeMismatchError: feature count (or T in sampled mode) differs
    """
    if not queries:
        raise EmptySetError("Empty query set")
    if not gallery:
        raise EmptySetError("Empty gallery set")
    workers = default_threads() if workers is None else max(1, int(workers))

    reference = queries[0]
    for rep in list(queries) + list(gallery):
        _check_pair(reference, rep, mode)

    out = np.empty((len(queries), len(gallery)), dtype=np.float64)
    if mode == "sampled":
        q_vectors = np.vstack([rep.sampled for rep in queries])
        g_vectors = np.vstack([rep.sampled for rep in gallery])
        t_samples = reference.t_samples
        _fill_rows(out, lambda block: _l1_rows(q_vectors[block], g_vectors) / t_samples, workers)
    elif mode == "exact":
        _fill_rows(
            out,
            lambda block: np.array([[rep_distance(queries[i], g, "exact") for g in gallery] for i in block]),
            workers,
        )
    else:
        raise ValueError(f"Unknown distance mode: {mode}")

    logger.debug(f"Computed {out.shape[0]}x{out.shape[1]} {mode} distance matrix with {workers} workers")
    return DistanceMatrix(out, _ids(queries), _ids(gallery))


# Crisp baselines

def avg_pool(tracklet: Tracklet) -> np.ndarray:
    """Column-wise mean of the frame feature matrix"""
    validate_tracklet(tracklet)
    return tracklet.features.values.mean(axis=0)


def max_pool(tracklet: Tracklet) -> np.ndarray:
    """Column-wise maximum of the frame feature matrix"""
    validate_tracklet(tracklet)
    return tracklet.features.values.max(axis=0)


def _as_pair(u: ArrayLike, v: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise ShapeMismatchError(f"Vector length mismatch: {u.size} vs {v.size}")
    return u, v


def euclidean(u: ArrayLike, v: ArrayLike) -> float:
    u, v = _as_pair(u, v)
    return float(np.linalg.norm(u - v))


def cosine(u: ArrayLike, v: ArrayLike) -> float:
    """1 - cos(u, v); a zero vector is at distance 1 from anything but another zero vector"""
    u, v = _as_pair(u, v)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0 if nu == nv else 1.0
    return float(1.0 - np.dot(u, v) / (nu * nv))


def crisp_distance_matrix(
    queries: ArrayLike,
    gallery: ArrayLike,
    metric: CrispMetric = "euclidean",
    workers: Optional[int] = None,
) -> DistanceMatrix:
    """Q x G distances between pooled vectors (rows of queries and gallery)"""
    q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    g = np.atleast_2d(np.asarray(gallery, dtype=np.float64))
    if q.shape[0] == 0 or q.size == 0:
        raise EmptySetError("Empty query set")
    if g.shape[0] == 0 or g.size == 0:
        raise EmptySetError("Empty gallery set")
    if q.shape[1] != g.shape[1]:
        raise ShapeMismatchError(f"Feature count mismatch: {q.shape[1]} vs {g.shape[1]}")
    if metric not in ("euclidean", "cosine"):
        raise ValueError(f"Unknown crisp metric: {metric}")
    workers = default_threads() if workers is None else max(1, int(workers))

    out = np.empty((q.shape[0], g.shape[0]), dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        _fill_rows(out, lambda block: cdist(q[block], g, metric=metric), workers)

    if metric == "cosine":
        q_zero = np.linalg.norm(q, axis=1) == 0
        g_zero = np.linalg.norm(g, axis=1) == 0
        either = q_zero[:, None] | g_zero[None, :]
        both = q_zero[:, None] & g_zero[None, :]
        out = np.where(either, np.where(both, 0.0, 1.0), out)
    return DistanceMatrix(out)
