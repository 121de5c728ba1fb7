"""Pareto frontier maintenance and the fitness parabola.

The frontier tracks non-dominated (compression rate, accuracy) points;
the parabola fitted to it scalarizes the two objectives as
y = accuracy - fitness(rate), which Bayesian optimization and the
good-point efficiency metric both use.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List

import numpy as np

from ..evaluation import EvalPoint

__all__ = ["ParetoFrontier", "FitnessCurve", "FitnessFitError", "fit_fitness", "good_point"]

GOOD_POINT_MARGIN = -0.001


def _dominates(p: EvalPoint, q: EvalPoint) -> bool:
    """True if p is at least as good as q in both objectives, better in one."""
    return (
        p.compression_rate >= q.compression_rate
        and p.accuracy >= q.accuracy
        and (p.compression_rate > q.compression_rate or p.accuracy > q.accuracy)
    )


class ParetoFrontier:
    """Incrementally maintained set of non-dominated EvalPoints."""

    def __init__(self, points: Iterable[EvalPoint] = ()):
        self._points: List[EvalPoint] = []
        for p in points:
            self.insert(p)

    def insert(self, point: EvalPoint) -> bool:
        """Add the point if no member dominates it; evict what it dominates.

        Returns True if the point joined the frontier (an "improvement").
        """
        for q in self._points:
            if _dominates(q, point):
                return False
        self._points = [q for q in self._points if not _dominates(point, q)]
        self._points.append(point)
        return True

    @property
    def points(self) -> List[EvalPoint]:
        """Members sorted by compression rate."""
        return sorted(self._points, key=lambda p: (p.compression_rate, p.accuracy))

    def __len__(self) -> int:
        return len(self._points)

    def __iter__(self):
        return iter(self.points)

    def dominates_point(self, point: EvalPoint) -> bool:
        return any(_dominates(q, point) for q in self._points)


@dataclass(frozen=True)
class FitnessCurve:
    """Parabola a*rate^2 + b*rate + c approximating best-known accuracy."""

    a: float
    b: float
    c: float

    def __call__(self, rate) -> float:
        return (self.a * rate + self.b) * rate + self.c

    def to_json_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c}

    @classmethod
    def from_json_dict(cls, d: dict) -> "FitnessCurve":
        return cls(d["a"], d["b"], d["c"])


class FitnessFitError(ValueError):
    """Too few frontier points, or rates too degenerate, to fit a parabola."""


def fit_fitness(frontier) -> FitnessCurve:
    """Least-squares parabola of accuracy on compression rate.

    Accepts a ParetoFrontier or any iterable of EvalPoints. Requires at
    least 3 points with 3 distinct rates; duplicate rates with
    conflicting accuracies make the quadratic model rank-deficient.
    """
    pts = list(frontier)
    if len(pts) < 3:
        raise FitnessFitError(f"need at least 3 frontier points, got {len(pts)}")
    rates = np.array([p.compression_rate for p in pts])
    accs = np.array([p.accuracy for p in pts])
    if np.unique(rates).size < 3:
        raise FitnessFitError("need at least 3 distinct compression rates")
    design = np.stack([rates ** 2, rates, np.ones_like(rates)], axis=1)
    coeffs, *_ = np.linalg.lstsq(design, accs, rcond=None)
    if not np.all(np.isfinite(coeffs)):
        raise FitnessFitError("fit produced non-finite coefficients")
    return FitnessCurve(float(coeffs[0]), float(coeffs[1]), float(coeffs[2]))


def good_point(point: EvalPoint, fitness: FitnessCurve) -> bool:
    """A trial counts as good when its accuracy is no more than 0.001
    below the fitted frontier at its compression rate."""
    return point.accuracy - fitness(point.compression_rate) > GOOD_POINT_MARGIN
