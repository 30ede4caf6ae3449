import numpy as np
import pytest

from unifactor import kernels


@pytest.fixture(params=kernels.available_backends())
def backend(request, monkeypatch):
    """Run the test once per kernel backend."""
    impl = kernels.load_backend(request.param)
    for name in kernels._NAMES:
        monkeypatch.setattr(kernels, name, getattr(impl, name))
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
