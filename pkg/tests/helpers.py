"""Shared test oracles and the analytic search objective.

The oracles here are deliberately independent of the implementation
paths they check: the DCT oracle evaluates the four-loop definition, the
Pareto oracle is the quadratic non-dominated filter, and the bounds
oracle re-derives the boundary matrices from their formulas.
"""

import math

import numpy as np

from qtab.evaluation import EvalPoint
from qtab.qtable import QTable


def naive_dct(block: np.ndarray) -> np.ndarray:
    """Direct O(64^2) DCT-II definition with JPEG normalization."""
    block = np.asarray(block, dtype=np.float64)
    out = np.zeros((8, 8))
    for u in range(8):
        for v in range(8):
            cu = 1.0 / math.sqrt(2.0) if u == 0 else 1.0
            cv = 1.0 / math.sqrt(2.0) if v == 0 else 1.0
            s = 0.0
            for x in range(8):
                for y in range(8):
                    s += (
                        block[x, y]
                        * math.cos((2 * x + 1) * u * math.pi / 16)
                        * math.cos((2 * y + 1) * v * math.pi / 16)
                    )
            out[u, v] = 0.25 * cu * cv * s
    return out


def naive_idct(coeffs: np.ndarray) -> np.ndarray:
    """Direct inverse of :func:`naive_dct`."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    out = np.zeros((8, 8))
    for x in range(8):
        for y in range(8):
            s = 0.0
            for u in range(8):
                for v in range(8):
                    cu = 1.0 / math.sqrt(2.0) if u == 0 else 1.0
                    cv = 1.0 / math.sqrt(2.0) if v == 0 else 1.0
                    s += (
                        cu * cv * coeffs[u, v]
                        * math.cos((2 * x + 1) * u * math.pi / 16)
                        * math.cos((2 * y + 1) * v * math.pi / 16)
                    )
            out[x, y] = 0.25 * s
    return out


def brute_force_frontier(points):
    """Quadratic non-dominated filter over EvalPoints."""
    out = []
    for p in points:
        dominated = any(
            q.compression_rate >= p.compression_rate
            and q.accuracy >= p.accuracy
            and (q.compression_rate > p.compression_rate or q.accuracy > p.accuracy)
            for q in points
        )
        if not dominated:
            out.append(p)
    return out


def brute_force_bounds(tables, rates, lo, hi):
    """Re-derivation of the boundary matrices straight from their formulas.

    Plain Python loops over cells; population statistics from exact
    integer sums, so the comparison with the library can be exact.
    """
    selected = [t for t, r in zip(tables, rates) if lo <= r <= hi]
    population = [t.entries for t in selected] + [t.entries.T for t in selected]
    n = len(population)
    lower = np.zeros((8, 8))
    upper = np.zeros((8, 8))
    for j in range(8):
        for k in range(8):
            col = [int(m[j, k]) for m in population]
            s1 = sum(col)
            s2 = sum(v * v for v in col)
            sigma = math.sqrt(n * s2 - s1 * s1) / n
            lower[j, k] = min(max(min(col) - 0.5 * sigma, 1.0), 255.0)
            upper[j, k] = min(max(max(col) + 0.5 * sigma, 1.0), 255.0)
    return lower, upper


def eval_points(pairs, qvalue=16):
    """EvalPoints with throwaway tables from (rate, acc) pairs."""
    table = QTable(np.full((8, 8), qvalue))
    return [
        EvalPoint(qtable=table, compression_rate=float(r), accuracy=float(a))
        for r, a in pairs
    ]


# ---------------------------------------------------------------------------
# Analytic search objective with a known optimum (no image encoding)
# ---------------------------------------------------------------------------

# Rate rises with the mean table entry; accuracy is a smooth bowl around
# a known optimum table, so every strategy sees gradient signal while
# plain random sampling only improves by luck.
OBJECTIVE_TARGET = 40.0 + (np.arange(64) * 29) % 177
OBJECTIVE_SCALE = 150.0


def synthetic_objective(qtable, trial_index=0, strategy_tag=""):
    flat = qtable.entries.reshape(64).astype(np.float64)
    rate = 5.0 + flat.mean() / 16.0
    d2 = float(np.mean(((flat - OBJECTIVE_TARGET) / OBJECTIVE_SCALE) ** 2))
    acc = min(1.0, max(0.0, 0.99 - 1.6 * d2))
    return EvalPoint(
        qtable=qtable,
        compression_rate=rate,
        accuracy=acc,
        trial_index=trial_index,
        strategy_tag=strategy_tag,
    )


def objective_accuracy_at_optimum() -> float:
    return 0.99
