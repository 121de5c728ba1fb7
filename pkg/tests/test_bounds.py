import numpy as np
import pytest

from qtab.evaluation import EvalPoint
from qtab.qtable import QTable, EmptyWindowError, compute_bounds

from helpers import brute_force_bounds


def _point(table, rate):
    return EvalPoint(qtable=table, compression_rate=rate, accuracy=0.5)


def test_single_symmetric_table_collapses_bounds():
    entries = np.full((8, 8), 40)
    t = QTable(entries)
    b = compute_bounds([_point(t, 22.0)], (21, 23))
    assert np.array_equal(b.lower, entries.astype(float))
    assert np.array_equal(b.upper, entries.astype(float))


def test_single_asymmetric_table_two_element_population():
    # Cell pair (a, b) across the diagonal: population {a, b} has
    # sigma = |a-b|/2, so lower = min - 0.25|a-b|, upper = max + 0.25|a-b|.
    entries = np.full((8, 8), 50)
    entries[1, 2] = 80   # a
    entries[2, 1] = 40   # b
    t = QTable(entries)
    b = compute_bounds([_point(t, 22.0)], (21, 23))
    assert b.lower[1, 2] == pytest.approx(40 - 0.25 * 40)
    assert b.lower[2, 1] == pytest.approx(40 - 0.25 * 40)
    assert b.upper[1, 2] == pytest.approx(80 + 0.25 * 40)
    assert b.upper[2, 1] == pytest.approx(80 + 0.25 * 40)
    assert b.lower[0, 0] == 50 and b.upper[0, 0] == 50


def test_window_filters_points():
    t1 = QTable(np.full((8, 8), 10))
    t2 = QTable(np.full((8, 8), 200))
    b = compute_bounds([_point(t1, 22.0), _point(t2, 50.0)], (21, 23))
    assert b.upper[0, 0] == 10


def test_empty_window_is_structured_error():
    t = QTable(np.full((8, 8), 10))
    with pytest.raises(EmptyWindowError):
        compute_bounds([_point(t, 30.0)], (21, 23))


def test_matches_brute_force_on_random_frontiers(rng):
    for _ in range(25):
        n = int(rng.integers(1, 8))
        tables = [QTable(rng.integers(1, 256, (8, 8))) for _ in range(n)]
        rates = rng.uniform(15, 30, n)
        points = [_point(t, r) for t, r in zip(tables, rates)]
        lo, hi = 18.0, 27.0
        if not any(lo <= r <= hi for r in rates):
            continue
        b = compute_bounds(points, (lo, hi))
        ref_lower, ref_upper = brute_force_bounds(tables, rates, lo, hi)
        assert np.array_equal(b.lower, ref_lower)
        assert np.array_equal(b.upper, ref_upper)
        # symmetry and ordering by construction
        assert np.array_equal(b.lower, b.lower.T)
        assert np.array_equal(b.upper, b.upper.T)
        assert np.all(b.lower <= b.upper)
