import numpy as np
import pytest

from compactvis import GenConfig, TimeSeries, make_rng
from compactvis import bundle as bundle_mod
from compactvis.datagen import random_walk_series


@pytest.fixture(scope="session")
def study_bundle(tmp_path_factory):
    """One default 4-participant bundle shared by the slower suites."""
    root = tmp_path_factory.mktemp("bundle") / "study"
    return bundle_mod.build_bundle(root, seed=42, participants=4)


def make_series(values, lo=0.0, hi=100.0) -> TimeSeries:
    from compactvis import ValueDomain

    return TimeSeries(values=np.asarray(values, dtype=float), domain=ValueDomain(lo, hi))


def walk(seed: int, **cfg_kwargs) -> TimeSeries:
    cfg = GenConfig(seed=0, **cfg_kwargs)
    return random_walk_series(cfg, make_rng(seed))
