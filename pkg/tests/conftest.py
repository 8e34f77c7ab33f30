import numpy as np
import pytest

from pwgl.geometry import PointCloud


def rng(seed):
    """Counter-based generator used throughout the tests."""
    return np.random.Generator(np.random.Philox(key=seed))


def random_cloud(seed, n=60, d=2, n_labels=2, values=None, box=1.0):
    """Uniform cloud with labels at the first n_labels indices."""
    g = rng(seed)
    pts = g.random((n, d)) * box
    idx = np.arange(n_labels)
    if values is None:
        values = g.random(n_labels)
    return PointCloud(pts, idx, np.asarray(values, dtype=float))


@pytest.fixture
def tmp_out(tmp_path):
    return tmp_path
