"""
Reference oracles and histogram transforms for tests.

Nothing here reuses the evaluation code it checks: quantiles are
interpolated with numpy.interp over the histogram knots, empirical W1 comes
from sorting raw samples, and mining enumerates every triple.
Not part of the package's public surface.
"""

from typing import List, Sequence

import numpy as np

from .config import DEFAULT_MARGIN, DistanceMode
from .core_types import FeatureHistogram, QuantileFunction, SymbolicRepresentation
from .errors import InsufficientLabelsError, SingletonLabelError
from .loss import Triplet
from .metric import rep_distance

QUADRATURE_CHUNK = 1 << 17


def _knots(q: QuantileFunction):
    """(t, x) end points of every positive-mass bin; a repeated t marks a jump"""
    h = q.histogram
    if h.lo == h.hi:
        return np.array([0.0, 1.0]), np.array([h.lo, h.lo])
    edges = h.lo + (h.hi - h.lo) * np.arange(h.bin_count + 1) / h.bin_count
    positive = np.flatnonzero(h.freqs > 0)
    t = np.column_stack((h.cum[positive], h.cum[positive + 1])).ravel()
    x = np.column_stack((edges[positive], edges[positive + 1])).ravel()
    return t, x


def oracle_w1_quadrature(a: QuantileFunction, b: QuantileFunction, steps: int = 1_000_000) -> float:
    """Midpoint-rule integral of |a^-1 - b^-1| over [0, 1]"""
    ta, xa = _knots(a)
    tb, xb = _knots(b)
    total = 0.0
    for start in range(0, steps, QUADRATURE_CHUNK):
        k = np.arange(start, min(steps, start + QUADRATURE_CHUNK), dtype=np.float64)
        t = (k + 0.5) / steps
        total += np.abs(np.interp(t, ta, xa) - np.interp(t, tb, xb)).sum()
    return float(total / steps)


def oracle_w1_sorted(x: Sequence[float], y: Sequence[float]) -> float:
    """Equal-size empirical W1: mean |x_(k) - y_(k)| over sorted samples"""
    xs = np.sort(np.asarray(x, dtype=np.float64))
    ys = np.sort(np.asarray(y, dtype=np.float64))
    if xs.shape != ys.shape:
        raise ValueError("Sorted-sample oracle needs equal sample sizes")
    return float(np.mean(np.abs(xs - ys)))


def shift_histogram(h: FeatureHistogram, c: float) -> FeatureHistogram:
    return FeatureHistogram(lo=h.lo + c, hi=h.hi + c, freqs=h.freqs)


def scale_histogram(h: FeatureHistogram, s: float) -> FeatureHistogram:
    if s <= 0:
        raise ValueError(f"Scale must be positive, got {s}")
    return FeatureHistogram(lo=h.lo * s, hi=h.hi * s, freqs=h.freqs)


def random_histogram(
    rng: np.random.Generator,
    max_bins: int = 16,
    magnitude: float = 1.0,
    empty_bins: bool = False,
) -> FeatureHistogram:
    """
    Histogram with 1..max_bins bins over a random range scaled by magnitude

    Every bin holds at least half of a uniform share unless empty_bins is set,
    in which case random bins are zeroed (at least one keeps its mass).
    """
    bins = int(rng.integers(1, max_bins + 1))
    lo = rng.uniform(-magnitude, magnitude)
    hi = lo + rng.uniform(0.01, 2.0) * magnitude
    freqs = 0.5 / bins + 0.5 * rng.dirichlet(np.ones(bins))
    if empty_bins and bins > 1:
        zeroed = rng.random(bins) < 0.3
        zeroed[rng.integers(bins)] = False
        freqs = np.where(zeroed, 0.0, freqs)
    return FeatureHistogram(lo=lo, hi=hi, freqs=freqs / freqs.sum())


def random_representation(
    rng: np.random.Generator,
    features: int,
    t_samples: int,
    max_bins: int = 16,
    identity: str = "",
    empty_bins: bool = False,
) -> SymbolicRepresentation:
    return SymbolicRepresentation(
        per_feature=tuple(
            QuantileFunction(random_histogram(rng, max_bins, empty_bins=empty_bins)) for _ in range(features)
        ),
        t_samples=t_samples,
        identity=identity,
    )


def brute_force_mine(
    reps: Sequence[SymbolicRepresentation],
    labels: Sequence[str],
    margin: float = DEFAULT_MARGIN,
    mode: DistanceMode = "sampled",
) -> List[Triplet]:
    """Enumerate every valid (anchor, positive, negative) and keep each anchor's extremes"""
    distinct = set(labels)
    if len(distinct) < 2:
        raise InsufficientLabelsError(f"Batch needs at least 2 identities, found {len(distinct)}")
    for label in labels:
        if list(labels).count(label) < 2:
            raise SingletonLabelError(label)

    n = len(reps)
    d = [[rep_distance(reps[i], reps[j], mode) for j in range(n)] for i in range(n)]
    mined = []
    for a in range(n):
        best = None
        for p in range(n):
            if p == a or labels[p] != labels[a]:
                continue
            for neg in range(n):
                if labels[neg] == labels[a]:
                    continue
                if best is None:
                    best = (p, neg)
                    continue
                bp, bn = best
                if d[a][p] > d[a][bp] or (d[a][p] == d[a][bp] and p < bp):
                    bp = p
                if d[a][neg] < d[a][bn] or (d[a][neg] == d[a][bn] and neg < bn):
                    bn = neg
                best = (bp, bn)
        p, neg = best
        d_ap, d_an = d[a][p], d[a][neg]
        mined.append(Triplet(a, p, neg, max(margin + (d_ap - d_an), 0.0), d_ap, d_an))
    return mined
