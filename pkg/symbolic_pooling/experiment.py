"""
End-to-end comparison of symbolic pooling against crisp pooling baselines
over a manifest's query and gallery splits.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from .config import EvalProtocol, PoolingConfig
from .core_types import Tracklet
from .errors import EmptySetError
from .feature_io import Manifest, iter_manifest_tracklets
from .metric import CrispMetric, DistanceMatrix, avg_pool, crisp_distance_matrix, distance_matrix, max_pool
from .retrieval import EvalReport, evaluate_distances
from .symbolic import pool_tracklets

logger = logging.getLogger(__name__)

Pooling = Literal["avg", "max"]
_POOLERS = {"avg": avg_pool, "max": max_pool}


@dataclass(frozen=True)
class PipelineRun:
    """Distances and report of one pipeline over the same query/gallery split"""

    name: str
    distances: DistanceMatrix
    report: EvalReport
    query_ids: Tuple[str, ...]
    gallery_ids: Tuple[str, ...]


def load_splits(manifest: Manifest) -> Tuple[List[Tracklet], List[Tracklet]]:
    queries = list(iter_manifest_tracklets(manifest, "query"))
    gallery = list(iter_manifest_tracklets(manifest, "gallery"))
    if not queries:
        raise EmptySetError("Manifest has no query entries")
    if not gallery:
        raise EmptySetError("Manifest has no gallery entries")
    return queries, gallery


def _finish(
    name: str,
    matrix: DistanceMatrix,
    queries: Sequence[Tracklet],
    gallery: Sequence[Tracklet],
    protocol: EvalProtocol,
) -> PipelineRun:
    query_ids = tuple(t.id for t in queries)
    gallery_ids = tuple(t.id for t in gallery)
    report = evaluate_distances(
        matrix.data,
        query_ids,
        gallery_ids,
        protocol,
        [t.camera for t in queries],
        [t.camera for t in gallery],
    )
    return PipelineRun(name, matrix, report, query_ids, gallery_ids)


def run_symbolic(
    queries: Sequence[Tracklet],
    gallery: Sequence[Tracklet],
    cfg: PoolingConfig,
    protocol: EvalProtocol,
) -> PipelineRun:
    """Symbolic pooling plus Wasserstein ranking"""
    matrix = distance_matrix(
        pool_tracklets(queries, cfg), pool_tracklets(gallery, cfg), protocol.mode, protocol.workers
    )
    return _finish("symbolic", matrix, queries, gallery, protocol)


def run_baseline(
    queries: Sequence[Tracklet],
    gallery: Sequence[Tracklet],
    pooling: Pooling,
    metric: CrispMetric,
    protocol: EvalProtocol,
) -> PipelineRun:
    """Crisp pooling (avg or max over frames) plus Euclidean or cosine ranking"""
    pool = _POOLERS[pooling]
    matrix = crisp_distance_matrix(
        np.vstack([pool(t) for t in queries]),
        np.vstack([pool(t) for t in gallery]),
        metric,
        protocol.workers,
    )
    return _finish(f"{pooling}+{metric}", matrix, queries, gallery, protocol)


def summary_table(runs: Sequence[PipelineRun]) -> pd.DataFrame:
    frames = [run.report.summary_frame().assign(pipeline=run.name) for run in runs]
    table = pd.concat(frames, ignore_index=True)
    return table.set_index("pipeline")


def compare_pipelines(
    manifest: Manifest,
    cfg: PoolingConfig,
    protocol: EvalProtocol,
    baselines: Sequence[Tuple[Pooling, CrispMetric]] = (("avg", "euclidean"),),
) -> Dict[str, PipelineRun]:
    """Run the symbolic pipeline and each baseline on the manifest's query/gallery splits"""
    queries, gallery = load_splits(manifest)
    runs = {"symbolic": run_symbolic(queries, gallery, cfg, protocol)}
    for pooling, metric in baselines:
        run = run_baseline(queries, gallery, pooling, metric, protocol)
        runs[run.name] = run
    for name, run in runs.items():
        logger.info(f"{name}: " + ", ".join(f"R{k}={rate:.3f}" for k, rate in run.report.cmc))
    return runs


def score_cdf(distances: np.ndarray) -> np.ndarray:
    """Empirical CDF value of every score among all scores of the same matrix"""
    flat = distances.ravel()
    return (rankdata(flat, method="max") / flat.size).reshape(distances.shape)


def score_shift(symbolic: PipelineRun, baseline: PipelineRun, top: Optional[int] = 10) -> pd.DataFrame:
    """
    Query/gallery pairs whose score CDF moved most between two pipelines

    A genuine pair improves when its symbolic CDF value is lower than the
    baseline's; an impostor pair improves when it is higher.
    """
    cdf_symbolic = score_cdf(symbolic.distances.data)
    cdf_baseline = score_cdf(baseline.distances.data)
    genuine = np.equal.outer(np.asarray(symbolic.query_ids, dtype=object), np.asarray(symbolic.gallery_ids, dtype=object))

    q_idx, g_idx = np.indices(cdf_symbolic.shape)
    shift = cdf_symbolic - cdf_baseline
    table = pd.DataFrame(
        {
            "query": q_idx.ravel(),
            "gallery": g_idx.ravel(),
            "genuine": genuine.ravel().astype(bool),
            "cdf_symbolic": cdf_symbolic.ravel(),
            "cdf_baseline": cdf_baseline.ravel(),
            "shift": shift.ravel(),
        }
    )
    table["improved"] = np.where(table["genuine"], table["shift"] < 0, table["shift"] > 0)
    table = table.reindex(table["shift"].abs().sort_values(ascending=False, kind="stable").index)
    table = table.reset_index(drop=True)
    return table if top is None else table.head(top)
