import functools
import logging

import pytest

from hipvp.calibration import CalibrationConfig, run_pipeline
from hipvp.synthetic import synthetic_dataset, synthetic_tables


@functools.lru_cache(maxsize=None)
def _dataset(noise, seed):
    return synthetic_dataset(synthetic_tables(), noise=noise, seed=seed)


@functools.lru_cache(maxsize=None)
def _pipeline(noise, seed):
    logging.getLogger("hipvp").setLevel(logging.ERROR)
    cfg = CalibrationConfig(tol_AN=1e-3 if noise == 0 else 0.1)
    return run_pipeline(_dataset(noise, seed), synthetic_tables(), cfg)


@pytest.fixture(scope="session")
def tables():
    return synthetic_tables()


@pytest.fixture(scope="session")
def clean_dataset():
    return _dataset(0.0, 0)


@pytest.fixture(scope="session")
def clean_calibration():
    return _pipeline(0.0, 0)


@pytest.fixture(scope="session")
def noisy_calibration():
    return _pipeline(0.02, 0)
