"""The two random strategies: sorted random search and bounded random search.

Sorted random search draws a value range (s, e), samples 64 integers,
sorts them along the zig-zag, and evaluates; it needs no bounds and is
the paper-recommended baseline. Bounded random search samples uniformly
inside an elementwise box; with the full [1, 255] box it degenerates to
plain (unsorted) uniform random search.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Optional, Tuple

import numpy as np

from ..qtable import Bounds, SampleRange, sorted_random_sample
from .base import StrategyRun, run_trials

__all__ = ["SortedRandomConfig", "BoundedRandomConfig", "run_sorted_random", "run_bounded_random"]


@dataclass(frozen=True)
class SortedRandomConfig:
    n_trials: int
    seed: int = 0
    descending: bool = False
    # When set, every trial uses this (s, e) instead of drawing one.
    fixed_range: Optional[Tuple[int, int]] = None


@dataclass(frozen=True)
class BoundedRandomConfig:
    n_trials: int
    seed: int = 0


def draw_sample_range(rng: np.random.Generator) -> SampleRange:
    """(s, e) uniform over all integer pairs with 1 <= s < e <= 255."""
    s = int(rng.integers(1, 255))
    e = int(rng.integers(s + 1, 256))
    return SampleRange(s, e)


def run_sorted_random(config: SortedRandomConfig, evaluator) -> StrategyRun:
    if config.n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    rng = np.random.default_rng(config.seed)
    run = StrategyRun("sorted_random", config.seed, asdict(config))

    def propose(i: int):
        if config.fixed_range is not None:
            sample_range = SampleRange(*config.fixed_range)
        else:
            sample_range = draw_sample_range(rng)
        return sorted_random_sample(sample_range, rng, descending=config.descending)

    return run_trials(run, config.n_trials, propose, evaluator)


def run_bounded_random(bounds: Bounds, config: BoundedRandomConfig, evaluator) -> StrategyRun:
    if config.n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    rng = np.random.default_rng(config.seed)
    run = StrategyRun("bounded_random", config.seed, asdict(config))
    return run_trials(
        run, config.n_trials, lambda i: bounds.sample_table(rng), evaluator
    )
