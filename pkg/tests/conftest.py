import numpy as np
import pytest

from mipconflict import kernels

BACKENDS = sorted(kernels.available())


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Route the propagation kernels through one backend for the test."""
    mod = kernels.available()[request.param]
    for name in ("max_activity", "row_deductions", "conflict_state"):
        monkeypatch.setattr(kernels, name, getattr(mod, name))
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
