"""
Symbolic triplet loss and batch-hard triplet mining.

The loss is an evaluation quantity here: no gradients are computed.
"""

import logging
from collections import Counter
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .config import DEFAULT_MARGIN, DistanceMode
from .core_types import SymbolicRepresentation
from .errors import InsufficientLabelsError, ShapeMismatchError, SingletonLabelError
from .metric import distance_matrix, rep_distance

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Triplet:
    """Indices of anchor, positive and negative within a batch, with the hinge loss"""

    anchor: int
    positive: int
    negative: int
    loss: float
    d_ap: float
    d_an: float


def triplet_loss(d_ap: float, d_an: float, margin: float = DEFAULT_MARGIN) -> float:
    """max(margin + d_ap - d_an, 0); equal distances give exactly the margin"""
    return max(margin + (d_ap - d_an), 0.0)


def symbolic_triplet_loss(
    anchor: SymbolicRepresentation,
    positive: SymbolicRepresentation,
    negative: SymbolicRepresentation,
    margin: float = DEFAULT_MARGIN,
    mode: DistanceMode = "sampled",
) -> float:
    """Triplet loss with Wasserstein distances between representations"""
    return triplet_loss(rep_distance(anchor, positive, mode), rep_distance(anchor, negative, mode), margin)


def check_batch_labels(labels: Sequence[str]) -> None:
    """
    Raises:
        InsufficientLabelsError: fewer than two distinct labels
        SingletonLabelError: a label with a single member (first in batch order)
    """
    counts = Counter(labels)
    if len(counts) < 2:
        raise InsufficientLabelsError(f"Batch needs at least 2 identities, found {len(counts)}")
    for label in labels:
        if counts[label] < 2:
            raise SingletonLabelError(label)


def batch_hard_mine(
    reps: Sequence[SymbolicRepresentation],
    labels: Sequence[str],
    margin: float = DEFAULT_MARGIN,
    mode: DistanceMode = "sampled",
    workers: Optional[int] = None,
) -> List[Triplet]:
    """
    One triplet per anchor: the farthest same-label item and the nearest
    other-label item, ties going to the lowest batch index

    Returns:
        Triplets in anchor order
    """
    if len(reps) != len(labels):
        raise ShapeMismatchError(f"{len(reps)} representations but {len(labels)} labels")
    check_batch_labels(labels)

    distances = distance_matrix(reps, reps, mode, workers).data
    label_array = np.asarray(labels, dtype=object)
    indices = np.arange(len(reps))

    triplets = []
    for anchor in indices:
        same = label_array == label_array[anchor]
        positives = indices[same & (indices != anchor)]
        negatives = indices[~same]
        # argmax/argmin return the first extreme, and candidates are in index order
        positive = int(positives[np.argmax(distances[anchor, positives])])
        negative = int(negatives[np.argmin(distances[anchor, negatives])])
        d_ap = float(distances[anchor, positive])
        d_an = float(distances[anchor, negative])
        triplets.append(Triplet(int(anchor), positive, negative, triplet_loss(d_ap, d_an, margin), d_ap, d_an))

    logger.info(f"Mined {len(triplets)} batch-hard triplets, mean loss {mean_loss(triplets):.6f}")
    return triplets


def mean_loss(triplets: Sequence[Triplet]) -> float:
    if not triplets:
        return 0.0
    return float(np.mean([t.loss for t in triplets]))
