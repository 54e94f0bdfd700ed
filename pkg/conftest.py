"""Shared fixtures for the symbolic pooling test suite"""

import numpy as np
import pytest

from symbolic_pooling.config import PoolingConfig
from symbolic_pooling.core_types import (
    FeatureHistogram,
    FrameFeatureMatrix,
    QuantileFunction,
    SymbolicRepresentation,
    Tracklet,
)
from symbolic_pooling.symbolic import build_histogram


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def four_values_histogram() -> FeatureHistogram:
    """[0, 1, 2, 3] in two bins: [0, 1.5) and [1.5, 3]"""
    return build_histogram([0.0, 1.0, 2.0, 3.0], 2)


@pytest.fixture
def unit_uniform() -> QuantileFunction:
    return QuantileFunction(FeatureHistogram(lo=0.0, hi=1.0, freqs=[1.0]))


@pytest.fixture
def fixed_bins() -> PoolingConfig:
    return PoolingConfig(bins=8, t_samples=32)


def make_tracklet(values, identity="id000", camera=None, name=None) -> Tracklet:
    return Tracklet(id=identity, features=FrameFeatureMatrix.from_array(values), camera=camera, name=name)


def point_mass_rep(values, t_samples=8, identity=""):
    """Representation whose feature m is a point mass at values[m]"""
    return SymbolicRepresentation(
        per_feature=tuple(QuantileFunction(FeatureHistogram.point_mass(v)) for v in values),
        t_samples=t_samples,
        identity=identity,
    )
