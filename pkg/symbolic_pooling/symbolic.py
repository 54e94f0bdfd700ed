"""
Distribution-valued pooling of frame-level features.

Each feature column of a tracklet is summarised by an equal-width histogram
over [min, max] of its values. The CDF is linear inside every bin, so both the
ECDF and its generalized inverse (the quantile function) are piecewise linear
and can be evaluated by binary search over the histogram's cumulative array.
"""

import logging
from typing import Iterable, List

import numpy as np
from numpy.typing import ArrayLike

from .config import PoolingConfig
from .core_types import (
    FeatureHistogram,
    QuantileFunction,
    SymbolicRepresentation,
    Tracklet,
    equal_width_edges,
    resolvable_bin_count,
    validate_tracklet,
)
from .errors import EmptyInputError, InvalidBinCountError, NonFiniteValueError, OutOfRangeError

logger = logging.getLogger(__name__)


def build_histogram(values: ArrayLike, bin_count: int) -> FeatureHistogram:
    """
    Fit an equal-width histogram over [min(values), max(values)]

    Values equal to the maximum fall in the last bin. A constant column gives
    the point-mass histogram whatever bin_count is. A range too narrow for
    bin_count distinct float64 edges gets the largest count it can resolve.

    Raises:
        EmptyInputError: no values
        InvalidBinCountError: bin_count < 1 or not an integer
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise EmptyInputError("Cannot build a histogram from zero values")
    if isinstance(bin_count, bool) or int(bin_count) != bin_count or bin_count < 1:
        raise InvalidBinCountError(f"Bin count must be a positive integer, got {bin_count}")

    finite = np.isfinite(values)
    if not finite.all():
        raise NonFiniteValueError(row=int(np.flatnonzero(~finite)[0]), col=0)

    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        return FeatureHistogram.point_mass(lo)

    bins = resolvable_bin_count(lo, hi, bin_count)
    if bins < bin_count:
        logger.debug(f"Range [{lo}, {hi}] resolves only {bins} of {bin_count} bins")
    counts, _ = np.histogram(values, bins=equal_width_edges(lo, hi, bins))
    return FeatureHistogram(lo=lo, hi=hi, freqs=counts / values.size)


def ecdf_values(h: FeatureHistogram, p: ArrayLike) -> np.ndarray:
    """Vectorized ecdf_eval"""
    p = np.asarray(p, dtype=np.float64)
    if h.is_point_mass:
        return np.where(p < h.lo, 0.0, 1.0)

    edges = h.edges
    # bin l (1-based) holds p when edges[l-1] <= p < edges[l]
    l = np.clip(np.searchsorted(edges, p, side="right"), 1, h.bin_count)
    left = edges[l - 1]
    width = edges[l] - left
    # (p - left) / width stays <= 1, so inside never passes cum[l]
    inside = h.cum[l - 1] + h.freqs[l - 1] * ((p - left) / width)
    result = np.where(p <= h.lo, 0.0, np.where(p >= h.hi, 1.0, inside))
    return np.clip(result, 0.0, 1.0)


def ecdf_eval(h: FeatureHistogram, p: float) -> float:
    """CDF of the histogram at p, linear inside each bin; p may lie outside [lo, hi]"""
    return float(ecdf_values(h, p))


def quantile_values(q: QuantileFunction, t: ArrayLike) -> np.ndarray:
    """
    Vectorized quantile evaluation for t already known to lie in [0, 1]

    Zero-mass bins have no t-extent, so the search over the cumulative array
    lands on the first positive-mass bin whose upper cumulative weight
    reaches t (the left-continuous generalized inverse).
    """
    h = q.histogram
    t = np.asarray(t, dtype=np.float64)
    if h.is_point_mass:
        return np.full(t.shape, h.lo)

    edges = h.edges
    l = np.clip(np.searchsorted(h.cum, t, side="left"), 1, h.bin_count)
    left = edges[l - 1]
    right = edges[l]
    mass = h.freqs[l - 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        inside = left + (right - left) * (t - h.cum[l - 1]) / mass
    inside = np.where(mass > 0, inside, left)
    inside = np.clip(inside, left, right)
    return np.where(t <= 0.0, h.lo, np.where(t >= 1.0, h.hi, inside))


def quantile_eval(q: QuantileFunction, t: float) -> float:
    """
    Quantile function at level t

    Raises:
        OutOfRangeError: t outside [0, 1]
    """
    if not 0.0 <= t <= 1.0:
        raise OutOfRangeError(f"Quantile level must be in [0, 1], got {t}")
    return float(quantile_values(q, t))


def midpoint_grid(t_samples: int) -> np.ndarray:
    """t_k = (k - 0.5) / T for k = 1..T"""
    return (np.arange(t_samples, dtype=np.float64) + 0.5) / t_samples


def sample_quantiles(rep: SymbolicRepresentation) -> np.ndarray:
    """
    Concatenate every feature's quantiles on the T-point midpoint grid

    Returns:
        Read-only array of length M x T; block m holds feature m
    """
    grid = midpoint_grid(rep.t_samples)
    sampled = np.concatenate([quantile_values(q, grid) for q in rep.per_feature])
    sampled.flags.writeable = False
    return sampled


def pool_tracklet(tracklet: Tracklet, cfg: PoolingConfig) -> SymbolicRepresentation:
    """Build one quantile function per feature column of the tracklet"""
    validate_tracklet(tracklet)
    values = tracklet.features.values
    bins = cfg.bin_count(tracklet.frame_count)

    per_feature = tuple(QuantileFunction(build_histogram(values[:, m], bins)) for m in range(values.shape[1]))
    return SymbolicRepresentation(
        per_feature=per_feature,
        t_samples=cfg.t_samples,
        identity=tracklet.id,
        camera=tracklet.camera,
        name=tracklet.name,
    )


def pool_tracklets(tracklets: Iterable[Tracklet], cfg: PoolingConfig) -> List[SymbolicRepresentation]:
    reps = [pool_tracklet(t, cfg) for t in tracklets]
    logger.info(f"Pooled {len(reps)} tracklets with {cfg.describe()} bins, T={cfg.t_samples}")
    return reps
