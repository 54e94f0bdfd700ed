"""
Domain types shared by every module.

All types are immutable after construction: numpy payloads are stored as
read-only arrays and the dataclasses are frozen.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidHistogramError,
    NonFiniteValueError,
)

MASS_TOLERANCE = 1e-9


def equal_width_edges(lo: float, hi: float, bin_count: int) -> np.ndarray:
    """H + 1 evenly spaced edges; the first is exactly lo and the last exactly hi"""
    return np.linspace(lo, hi, bin_count + 1)


def resolvable_bin_count(lo: float, hi: float, bin_count: int) -> int:
    """
    Largest count up to bin_count whose equal-width edges over [lo, hi] are
    strictly increasing in float64

    A range only a few ulps wide cannot hold many distinct edges. One bin is
    always resolvable when lo < hi.
    """
    bins = int(bin_count)
    while bins > 1:
        distinct = int(np.count_nonzero(np.diff(equal_width_edges(lo, hi, bins)) > 0))
        if distinct == bins:
            break
        bins = distinct
    return bins


def _frozen_array(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class FrameFeatureMatrix:
    """N frames x M features, stored row-major"""

    rows: int
    cols: int
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen_array(np.ravel(self.data)))

    @classmethod
    def from_array(cls, values) -> "FrameFeatureMatrix":
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise DimensionMismatchError(expected=2, actual=arr.ndim)
        return cls(rows=arr.shape[0], cols=arr.shape[1], data=arr)

    @property
    def values(self) -> np.ndarray:
        """N x M view of the data"""
        if self.data.size != self.rows * self.cols:
            raise DimensionMismatchError(self.rows * self.cols, self.data.size)
        return self.data.reshape(self.rows, self.cols)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrameFeatureMatrix):
            return NotImplemented
        return (self.rows, self.cols) == (other.rows, other.cols) and np.array_equal(self.data, other.data)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Tracklet:
    """Frame-level features of one identity sample seen by one camera"""

    id: str
    features: FrameFeatureMatrix
    camera: Optional[str] = None
    name: Optional[str] = None

    @property
    def frame_count(self) -> int:
        return self.features.rows

    @property
    def feature_count(self) -> int:
        return self.features.cols


def validate_tracklet(tracklet: Tracklet) -> Tracklet:
    """
    Check the tracklet invariants

    Returns:
        The same tracklet when valid

    Raises:
        DimensionMismatchError: data length differs from N x M, or N/M < 1
        NonFiniteValueError: a NaN/Inf entry, reported with its row and col
    """
    features = tracklet.features
    if features.rows < 1 or features.cols < 1:
        raise DimensionMismatchError(expected=max(1, features.rows) * max(1, features.cols), actual=features.data.size)
    if features.data.size != features.rows * features.cols:
        raise DimensionMismatchError(features.rows * features.cols, features.data.size)

    bad = np.flatnonzero(~np.isfinite(features.data))
    if bad.size:
        row, col = divmod(int(bad[0]), features.cols)
        raise NonFiniteValueError(row, col)
    return tracklet


@dataclass(frozen=True, eq=False)
class FeatureHistogram:
    """
    Equal-width histogram of one feature's values over [lo, hi]

    cum is derived from freqs at construction (cum[0] = 0, cum[l] = sum of
    freqs[:l]) so CDF and quantile lookups can binary-search it.
    """

    lo: float
    hi: float
    freqs: np.ndarray
    cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        freqs = _frozen_array(self.freqs)
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        object.__setattr__(self, "freqs", freqs)

        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or self.lo > self.hi:
            raise InvalidHistogramError(f"Invalid range [{self.lo}, {self.hi}]")
        if freqs.ndim != 1 or freqs.size < 1:
            raise InvalidHistogramError("Histogram needs at least one bin")
        if self.lo == self.hi and freqs.size != 1:
            raise InvalidHistogramError("Point-mass histogram must have exactly one bin")
        if self.lo < self.hi and resolvable_bin_count(self.lo, self.hi, freqs.size) != freqs.size:
            raise InvalidHistogramError(f"{freqs.size} bins do not have distinct edges over [{self.lo}, {self.hi}]")
        if np.any(~np.isfinite(freqs)) or np.any(freqs < 0):
            raise InvalidHistogramError("Bin frequencies must be finite and non-negative")

        cum = np.concatenate(([0.0], np.cumsum(freqs)))
        if abs(cum[-1] - 1.0) > MASS_TOLERANCE:
            raise InvalidHistogramError(f"Bin frequencies sum to {cum[-1]}, expected 1")
        cum.flags.writeable = False
        object.__setattr__(self, "cum", cum)

    @classmethod
    def point_mass(cls, value: float) -> "FeatureHistogram":
        return cls(lo=value, hi=value, freqs=[1.0])

    @property
    def bin_count(self) -> int:
        return int(self.freqs.size)

    @property
    def is_point_mass(self) -> bool:
        return self.lo == self.hi

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.bin_count

    @cached_property
    def edges(self) -> np.ndarray:
        """H + 1 strictly increasing bin edges, or [lo, lo] for a point mass"""
        edges = equal_width_edges(self.lo, self.hi, self.bin_count)
        edges.flags.writeable = False
        return edges

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureHistogram):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi and np.array_equal(self.freqs, other.freqs)

    __hash__ = None


@dataclass(frozen=True, eq=True)
class QuantileFunction:
    """Piecewise-linear inverse of a histogram's CDF; evaluated in symbolic"""

    histogram: FeatureHistogram

    @property
    def lo(self) -> float:
        return self.histogram.lo

    @property
    def hi(self) -> float:
        return self.histogram.hi

    @property
    def span(self) -> float:
        return self.histogram.hi - self.histogram.lo

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SymbolicRepresentation:
    """One quantile function per feature, plus the T used for the sampled vector"""

    per_feature: Tuple[QuantileFunction, ...]
    t_samples: int
    identity: str = ""
    camera: Optional[str] = None
    name: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "per_feature", tuple(self.per_feature))
        if not self.per_feature:
            raise DimensionMismatchError(expected=1, actual=0)
        if int(self.t_samples) < 1:
            raise InvalidHistogramError(f"t_samples must be positive, got {self.t_samples}")

    @property
    def feature_count(self) -> int:
        return len(self.per_feature)

    @cached_property
    def sampled(self) -> np.ndarray:
        """M x T quantile samples, concatenated feature by feature (read-only)"""
        from .symbolic import sample_quantiles

        return sample_quantiles(self)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymbolicRepresentation):
            return NotImplemented
        return (
            self.t_samples == other.t_samples
            and self.identity == other.identity
            and self.camera == other.camera
            and self.name == other.name
            and self.per_feature == other.per_feature
        )

    __hash__ = None


class RankedItem(NamedTuple):
    index: int
    identity: str
    distance: float


@dataclass(frozen=True)
class RetrievalResult:
    """Ranked gallery for one query; relevance is identity equality"""

    query_id: str
    ranked_gallery: Tuple[RankedItem, ...]
    relevant_count: int

    @property
    def relevant_flags(self) -> np.ndarray:
        return np.array([item.identity == self.query_id for item in self.ranked_gallery], dtype=bool)

    @property
    def first_hit(self) -> Optional[int]:
        """1-based position of the first relevant item, or None"""
        hits = np.flatnonzero(self.relevant_flags)
        return int(hits[0]) + 1 if hits.size else None
