"""Significance testing and search-efficiency profiling.

The t-distribution CDF is computed from scratch via the regularized
incomplete beta function (continued fraction, modified Lentz), targeting
1e-12 precision; no statistics library is involved. Accuracy resampling
draws class/image sub-datasets without replacement and reuses the
evaluator's deterministic per-image correctness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .evaluation import DatasetEvaluator
from .qtable import QTable
from .search.base import StrategyRun
from .search.frontier import FitnessCurve, good_point

__all__ = [
    "TTestResult",
    "DegenerateSamplesError",
    "ResamplePlan",
    "EfficiencyReport",
    "two_sample_t",
    "student_t_sf2",
    "regularized_incomplete_beta",
    "resample_accuracies",
    "profile_strategy",
]

_CF_EPS = 1e-15
_CF_FPMIN = 1e-300
_CF_MAX_ITER = 300


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_FPMIN:
        d = _CF_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise RuntimeError(f"incomplete beta did not converge for a={a} b={b} x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) to ~1e-12 absolute precision."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_beta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    front = math.exp(a * math.log(x) + b * math.log1p(-x) - ln_beta)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def student_t_sf2(t: float, df: float) -> float:
    """Two-sided tail probability P(|T| >= |t|) for Student's t."""
    if df <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    if t == 0.0:
        return 1.0
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


class DegenerateSamplesError(ValueError):
    """Pooled variance is zero; the t statistic is undefined."""


@dataclass(frozen=True)
class TTestResult:
    mean_diff: float
    t_statistic: float
    p_value: float
    df: float


def two_sample_t(a: Sequence[float], b: Sequence[float],
                 welch: bool = False) -> TTestResult:
    """Two-sample Student t-test with pooled variance (Welch by flag).

    Two-sided p-value from the t-distribution CDF. Requires at least two
    observations per sample and a nonzero pooled variance.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise ValueError(f"need >= 2 observations per sample, got {na} and {nb}")
    va = float(a.var(ddof=1))
    vb = float(b.var(ddof=1))
    mean_diff = float(a.mean() - b.mean())
    if welch:
        se2 = va / na + vb / nb
        if se2 == 0.0:
            raise DegenerateSamplesError("zero variance in both samples")
        df = se2 ** 2 / (
            (va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1)
        )
        t = mean_diff / math.sqrt(se2)
    else:
        df = na + nb - 2
        pooled = ((na - 1) * va + (nb - 1) * vb) / df
        if pooled == 0.0:
            raise DegenerateSamplesError("zero variance in both samples")
        t = mean_diff / math.sqrt(pooled * (1.0 / na + 1.0 / nb))
    return TTestResult(mean_diff, t, student_t_sf2(t, df), float(df))


# ---------------------------------------------------------------------------
# Accuracy resampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResamplePlan:
    """How to draw accuracy sub-datasets for significance testing."""

    n_resamples: int = 100
    classes_per_sample: int = 1
    images_per_class: int = 1
    seed: int = 0

    def __post_init__(self):
        if min(self.n_resamples, self.classes_per_sample, self.images_per_class) < 1:
            raise ValueError("all plan fields must be positive")


def resample_accuracies(evaluator: DatasetEvaluator, qtable: QTable,
                        plan: ResamplePlan) -> np.ndarray:
    """Accuracy on n_resamples fresh class/image subsamples.

    Each resample draws classes_per_sample classes and images_per_class
    images per chosen class, both without replacement. The evaluator's
    per-image correctness is deterministic, so the subsample accuracy is
    the mean of the corresponding correctness entries (images are never
    re-compressed per resample).
    """
    dataset = evaluator.dataset
    if plan.classes_per_sample > dataset.class_count:
        raise ValueError(
            f"classes_per_sample {plan.classes_per_sample} exceeds "
            f"class count {dataset.class_count}"
        )
    by_class = {c: np.flatnonzero(dataset.labels == c)
                for c in range(dataset.class_count)}
    usable = [c for c, idx in by_class.items() if len(idx) >= plan.images_per_class]
    if len(usable) < plan.classes_per_sample:
        raise ValueError(
            f"only {len(usable)} classes have >= {plan.images_per_class} images; "
            f"need {plan.classes_per_sample}"
        )
    _, correct, _ = evaluator.evaluate_detailed(qtable)
    rng = np.random.default_rng(plan.seed)
    usable_arr = np.array(usable)
    out = np.empty(plan.n_resamples)
    for r in range(plan.n_resamples):
        classes = rng.choice(usable_arr, size=plan.classes_per_sample, replace=False)
        picks = [
            rng.choice(by_class[c], size=plan.images_per_class, replace=False)
            for c in classes
        ]
        out[r] = correct[np.concatenate(picks)].mean()
    return out


# ---------------------------------------------------------------------------
# Efficiency profiling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EfficiencyReport:
    """Decision-time and trials-to-k-good summary of one strategy run."""

    mean_decision_time: float
    trials_to_k_good: Optional[int]
    k: int


def profile_strategy(run: StrategyRun, fitness: FitnessCurve,
                     k: int = 10) -> EfficiencyReport:
    """Mean propose time over the first 100 trials and the trial count at
    which the k-th good point appeared (None if never)."""
    times = run.decision_times[:100]
    mean_time = float(np.mean(times)) if times else 0.0
    n_good = 0
    trials_to_k: Optional[int] = None
    for i, point in enumerate(run.records):
        if good_point(point, fitness):
            n_good += 1
            if n_good == k:
                trials_to_k = i + 1
                break
    return EfficiencyReport(mean_time, trials_to_k, k)
