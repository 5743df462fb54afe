import os

import numpy as np
import pytest

from geoadaler.data import write_synthetic_idx


@pytest.fixture(scope="session")
def synthetic_data_dir(tmp_path_factory):
    """Small deterministic image-classification dataset in IDX files."""
    directory = tmp_path_factory.mktemp("idxdata")
    write_synthetic_idx(str(directory), n_train=600, n_test=200, side=12, seed=99)
    return str(directory)


@pytest.fixture(scope="session")
def mnist_dir():
    """Real dataset directory, present only when the environment provides it."""
    directory = os.environ.get("GEOADALER_DATA_DIR")
    required = [
        "train-images-idx3-ubyte",
        "train-labels-idx1-ubyte",
        "t10k-images-idx3-ubyte",
        "t10k-labels-idx1-ubyte",
    ]
    if not directory or not all(os.path.exists(os.path.join(directory, f)) for f in required):
        pytest.skip("MNIST IDX files not available; set GEOADALER_DATA_DIR to run this")
    return directory


def assert_close(actual, expected, tol=1e-12):
    actual = np.asarray(actual, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    assert actual.shape == expected.shape, f"{actual.shape} vs {expected.shape}"
    assert np.all(np.abs(actual - expected) <= tol), f"{actual} != {expected} (tol {tol})"
