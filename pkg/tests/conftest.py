"""Shared fixtures: synthetic datasets built once per session."""
import numpy as np
import pytest

from qpqc.data import synth_dataset


def _make(tmp_path_factory, name, shape, classes, per_class, seed=0):
    path = tmp_path_factory.mktemp(name)
    synth_dataset(str(path), shape, classes, per_class, seed)
    return str(path)


@pytest.fixture(scope="session")
def ds4_500(tmp_path_factory):
    """4-class, 125 per class, 16x16x3."""
    return _make(tmp_path_factory, "ds4_500", (16, 16, 3), 4, 125)


@pytest.fixture(scope="session")
def ds4_100(tmp_path_factory):
    """4-class, 25 per class, 16x16x3 (fast training tests)."""
    return _make(tmp_path_factory, "ds4_100", (16, 16, 3), 4, 25)


@pytest.fixture(scope="session")
def ds10_500(tmp_path_factory):
    """10-class, 50 per class, 16x16x3."""
    return _make(tmp_path_factory, "ds10_500", (16, 16, 3), 10, 50)


@pytest.fixture(scope="session")
def ds10_200(tmp_path_factory):
    """10-class, 20 per class, 16x16x3 (reduced sample count keeps the
    angle-encoded runs inside their runtime budget)."""
    return _make(tmp_path_factory, "ds10_200", (16, 16, 3), 10, 20)


def rel_err(a, b, floor=1.0):
    """Max relative error with an absolute floor for near-zero entries."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.max(np.abs(a - b) / np.maximum(floor, np.abs(b))))
