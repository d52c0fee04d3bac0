import numpy as np
import pytest

from tpisim import build_config, reference_config


@pytest.fixture(scope="session")
def ref_cfg():
    return reference_config()


@pytest.fixture(scope="session")
def nodead_cfg():
    """Default parameters with the dead-time filter disabled; isolates the
    Poisson sampling path in statistical tests."""
    return build_config(dead_time_ns=0.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)
