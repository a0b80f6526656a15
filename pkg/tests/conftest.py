import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from malign.scoring import SequenceDistribution, lcs_indicator

settings.register_profile("malign", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("malign")


@pytest.fixture
def lcs2():
    return lcs_indicator(2, 2)


@pytest.fixture
def uniform2():
    return SequenceDistribution.uniform(2, 2)


@pytest.fixture
def example12():
    x1 = np.array([1, 1, 2, 1, 2, 1, 1, 2, 1, 1, 3, 1])
    x2 = np.array([2, 1, 1, 3, 2, 3, 1, 2, 1, 1, 1, 1])
    return x1, x2, x2.copy()
