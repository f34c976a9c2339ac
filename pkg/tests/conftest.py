import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    max_examples=50,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def small_synthetic():
    from concertml.evaluation import SyntheticSpec, generate_synthetic

    return generate_synthetic(SyntheticSpec(n_rows=300, label_noise=0.1, seed=101))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240)
