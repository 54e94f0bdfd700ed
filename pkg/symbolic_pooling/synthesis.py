"""
Seeded synthetic tracklet datasets.

Two schemes, both drawing frame features from per-feature normals:

- mean-sep: classes differ in per-feature means, with unit variance.
- variance-sep: every class has zero mean on every feature, classes differ
  only in their per-feature standard deviations. Averaging frames erases the
  class signal here while the per-feature distributions keep it.
"""

import logging
from pathlib import Path
from typing import Literal

import numpy as np

from .core_types import FrameFeatureMatrix
from .feature_io import Manifest, ManifestEntry, PathLike, save_manifest, save_tracklet_bin, save_tracklet_csv

logger = logging.getLogger(__name__)

Scheme = Literal["mean-sep", "variance-sep"]

MEAN_RANGE = (-2.0, 2.0)
SIGMA_RANGE = (0.25, 4.0)
QUERY_CAMERA = "cam1"
GALLERY_CAMERA = "cam2"


def class_parameters(rng: np.random.Generator, classes: int, features: int, scheme: Scheme):
    """Per-class (means, log standard deviations), each classes x features"""
    if scheme == "mean-sep":
        means = rng.uniform(*MEAN_RANGE, size=(classes, features))
        log_sigmas = np.zeros((classes, features))
    elif scheme == "variance-sep":
        # every class permutes the same sigma ladder, so all classes share one overall scale
        means = np.zeros((classes, features))
        ladder = np.linspace(np.log(SIGMA_RANGE[0]), np.log(SIGMA_RANGE[1]), features)
        log_sigmas = np.vstack([rng.permutation(ladder) for _ in range(classes)])
    else:
        raise ValueError(f"Unknown synthesis scheme: {scheme}")
    return means, log_sigmas


def sample_tracklet(
    rng: np.random.Generator,
    mean: np.ndarray,
    log_sigma: np.ndarray,
    frames: int,
    noise: float,
    scheme: Scheme,
) -> np.ndarray:
    """
    Frames x features draw for one tracklet

    noise perturbs the class parameter that carries the signal: the means
    (additively) for mean-sep, the log standard deviations for variance-sep.
    """
    jitter = noise * rng.standard_normal(mean.shape)
    if scheme == "mean-sep":
        mean = mean + jitter
    else:
        log_sigma = log_sigma + jitter
    return mean + np.exp(log_sigma) * rng.standard_normal((frames, mean.size))


def generate_dataset(
    out_dir: PathLike,
    classes: int,
    tracklets_per_class: int,
    frames: int,
    features: int,
    scheme: Scheme = "variance-sep",
    noise: float = 0.05,
    seed: int = 0,
    file_format: Literal["bin", "csv"] = "bin",
) -> Manifest:
    """
    Write feature files and a manifest under out_dir

    The first half (rounded down) of each class's tracklets goes to the query
    split on QUERY_CAMERA, the rest to the gallery on GALLERY_CAMERA. Output
    is byte-identical for identical arguments.

    Returns:
        The manifest written to out_dir/manifest.csv
    """
    if min(classes, tracklets_per_class, frames, features) < 1:
        raise ValueError("classes, tracklets_per_class, frames and features must be positive")
    if noise < 0:
        raise ValueError(f"Noise must be non-negative, got {noise}")

    out_dir = Path(out_dir)
    feature_dir = out_dir / "features"
    feature_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(seed)
    means, log_sigmas = class_parameters(rng, classes, features, scheme)
    query_count = tracklets_per_class // 2

    entries = []
    for c in range(classes):
        for k in range(tracklets_per_class):
            tracklet_id = f"c{c:03d}_t{k:03d}"
            values = sample_tracklet(rng, means[c], log_sigmas[c], frames, noise, scheme)
            matrix = FrameFeatureMatrix.from_array(values.astype(np.float32))

            relative = Path("features") / f"{tracklet_id}.{file_format}"
            if file_format == "csv":
                save_tracklet_csv(out_dir / relative, matrix)
            else:
                save_tracklet_bin(out_dir / relative, matrix)

            is_query = k < query_count
            entries.append(
                ManifestEntry(
                    tracklet_id=tracklet_id,
                    identity=f"id{c:03d}",
                    camera=QUERY_CAMERA if is_query else GALLERY_CAMERA,
                    split="query" if is_query else "gallery",
                    path=relative.as_posix(),
                )
            )

    manifest = Manifest(feature_dim=features, entries=tuple(entries), root=out_dir)
    save_manifest(out_dir / "manifest.csv", manifest)
    logger.info(
        f"Wrote {len(entries)} {scheme} tracklets ({classes} classes x {tracklets_per_class}) to {out_dir}"
    )
    return manifest
