import numpy as np
import pytest

from data.config import Config
from services.montecarlo import McConfig
from utils.linalg import Covariance


@pytest.fixture
def sigma_better():
    return Covariance.from_pairs(Config.SIGMA_1_BETTER), Covariance.from_pairs(Config.SIGMA_2_BETTER)


@pytest.fixture
def sigma_worse():
    return Covariance.from_pairs(Config.SIGMA_1_WORSE), Covariance.from_pairs(Config.SIGMA_2_WORSE)


@pytest.fixture
def sigma_common():
    return Covariance.from_pairs(Config.SIGMA_2_COMMON)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_mc():
    return McConfig(n_samples=200_000, seed=7, batch=50_000, workers=2)


@pytest.fixture
def output_dir(tmp_path):
    out = tmp_path / "results"
    out.mkdir()
    return out
