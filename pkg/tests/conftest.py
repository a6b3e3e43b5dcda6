import numpy as np
import pytest

from masstest.data import LabelVector, TFRTensor


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_tensor(n_per_cond=4, nc=2, m=3, n=5, seed=0):
    """Small valid TFRTensor with half-normal entries."""
    gen = np.random.default_rng(seed)
    power = np.abs(gen.standard_normal((2 * n_per_cond, nc, m, n)))
    labels = LabelVector(("A",) * n_per_cond + ("B",) * n_per_cond)
    return TFRTensor(
        power=power,
        freq_axis=np.arange(1.0, m + 1.0),
        time_axis=np.arange(n) * 0.05,
        channel_names=tuple(f"ch{i}" for i in range(nc)),
        labels=labels,
    )


@pytest.fixture
def tiny_tensor():
    return make_tensor()
