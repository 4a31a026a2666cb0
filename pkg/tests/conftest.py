"""Shared fixtures and independent oracles for the test suite."""

import numpy as np
import pytest

from stepgraph import SampleSet

# Fixed 12x4 dataset behind the frozen scan/assembly oracle values in
# test_stepwise.py (values rounded to 3 decimals on purpose so the
# literals stay short).
TINY4 = np.array([
    [0.609, -2.080, 1.501, 1.881],
    [-3.902, -2.604, 0.256, -0.632],
    [-0.034, -1.706, 1.759, 1.556],
    [0.132, 2.254, 0.935, -1.719],
    [0.738, -1.918, 1.757, -0.100],
    [-0.370, -1.362, 2.445, -0.309],
    [-0.857, -0.704, 1.065, 0.731],
    [0.825, 0.862, 4.283, -0.813],
    [-1.024, -1.628, 1.232, 2.258],
    [-0.228, -1.680, -1.649, 1.301],
    [1.487, 1.086, -1.331, 0.464],
    [0.233, 0.437, 1.743, 0.447],
])


@pytest.fixture
def tiny4() -> SampleSet:
    return SampleSet.from_matrix(TINY4.copy())


@pytest.fixture
def tiny4c() -> SampleSet:
    # column-centered copy; regressions without an intercept on this are
    # the same as intercept regressions on the raw data
    return SampleSet.from_matrix(TINY4 - TINY4.mean(axis=0))


def ols_residual(y, z):
    """Independent least-squares oracle: intercept + lstsq, no Gram trick."""
    y = np.asarray(y, dtype=float)
    if z is None or (hasattr(z, "shape") and z.shape[1] == 0):
        return y - y.mean()
    design = np.column_stack([np.ones(len(y)), z])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return y - design @ coef


def corr_oracle(a, b):
    a = np.asarray(a, dtype=float) - np.mean(a)
    b = np.asarray(b, dtype=float) - np.mean(b)
    return float(a @ b / np.sqrt((a @ a) * (b @ b)))
