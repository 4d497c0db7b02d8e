import math

import numpy as np
import pytest

from plume_app.errors import EmptyGroupError
from plume_app.metrics import (cluster_count, effective_area, mean_nnd, occupied_area, polarity, standard_error,
                               wilson_interval)


def test_polarity():
    assert polarity(np.array([[1.0, 0.0]] * 5)) == pytest.approx(1.0)
    assert polarity(np.array([[1.0, 0.0], [-1.0, 0.0]])) == pytest.approx(0.0)
    assert polarity(np.array([[1.0, 0.0], [0.0, 1.0]])) == pytest.approx(math.sqrt(2) / 2)


def test_polarity_of_empty_group():
    with pytest.raises(EmptyGroupError):
        polarity(np.empty((0, 2)))


def test_mean_nnd():
    assert mean_nnd(np.array([[0.5, 0.5], [0.51, 0.5]])) == pytest.approx(0.01)
    collinear = np.array([[0.2, 0.5], [0.21, 0.5], [0.23, 0.5]])
    assert mean_nnd(collinear) == pytest.approx(0.04 / 3)


def test_mean_nnd_wraps():
    assert mean_nnd(np.array([[0.01, 0.3], [0.99, 0.3]])) == pytest.approx(0.02)


def test_mean_nnd_needs_two_agents():
    with pytest.raises(EmptyGroupError):
        mean_nnd(np.array([[0.5, 0.5]]))


def test_cluster_count():
    positions = np.array([[0.1, 0.1], [0.15, 0.1], [0.6, 0.6], [0.65, 0.62], [0.98, 0.1]])
    # The last agent links to the first across the periodic edge
    assert cluster_count(positions, 0.125) == 2
    assert cluster_count(positions, 0.01) == 5
    assert cluster_count(np.empty((0, 2)), 0.125) == 0


def test_occupied_area():
    r = 0.002
    single = occupied_area(np.array([[0.5, 0.5]]), r)
    assert single == pytest.approx(math.pi * r * r, rel=0.01)
    apart = occupied_area(np.array([[0.5, 0.5], [0.6, 0.5]]), r)
    assert apart == pytest.approx(2 * single)
    overlapping = occupied_area(np.array([[0.5, 0.5], [0.501, 0.5]]), r)
    assert single < overlapping < 2 * single
    # Split across the periodic edge
    wrapped = occupied_area(np.array([[0.9995, 0.5], [0.0005, 0.5]]), r)
    assert wrapped == pytest.approx(overlapping)


def test_effective_area():
    assert effective_area(60, 2e-3) == pytest.approx(60 * math.pi * 4e-6)


def test_standard_error():
    assert standard_error(0.5, 100) == pytest.approx(0.05)
    assert math.isnan(standard_error(0.5, 0))


def test_wilson_interval():
    low, high = wilson_interval(50, 100)
    assert low < 0.5 < high
    assert (low + high) / 2 == pytest.approx(0.5)
    assert high - low == pytest.approx(0.1923, abs=1e-3)
    low, high = wilson_interval(0, 20)
    assert low == pytest.approx(0.0, abs=1e-12)
    assert 0 < high < 0.2
