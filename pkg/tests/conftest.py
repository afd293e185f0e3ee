import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from otscale import Histogram, make_kernel

DATA = Path(__file__).parent / "data"
MNIST_SAMPLE = DATA / "mnist-sample-256-idx3-ubyte"

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_instance(n, seed, lam=1.0):
    """Kernel from a uniform [0, 1] cost plus two random simplex histograms."""
    rng = np.random.default_rng(seed)
    kernel = make_kernel(rng.random((n, n)), lam)
    r = Histogram.from_mass(1.0 - rng.random(n))
    c = Histogram.from_mass(1.0 - rng.random(n))
    return kernel, r, c


@pytest.fixture
def small_instance():
    return random_instance(8, 1234)
