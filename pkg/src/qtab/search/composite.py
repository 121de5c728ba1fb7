"""Composite heuristic optimization: a bandit over classic optimizers.

Every trial a sliding-window UCB bandit picks one arm (PSO, SA, DE,
greedy mutation, Nelder-Mead); the arm proposes the next table from its
own internal state, and the outcome feeds back to both the arm (the
scalar objective) and the bandit (reward 1 if the trial improved the
Pareto frontier, else 0).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, asdict
from typing import Optional, Tuple

import numpy as np

from ..qtable import Bounds, QTable
from .arms import make_arm
from .base import StrategyRun, run_trials
from .frontier import FitnessCurve

__all__ = ["CompositeConfig", "SlidingWindowUCB", "run_composite"]

DEFAULT_ARMS = ("pso", "sa", "de", "greedy_mutation", "nelder_mead")


@dataclass(frozen=True)
class CompositeConfig:
    n_trials: int
    seed: int = 0
    window: int = 50
    ucb_c: float = 1.0
    arms: Tuple[str, ...] = DEFAULT_ARMS


class SlidingWindowUCB:
    """UCB over a sliding window of (arm, reward) pairs.

    Unplayed-in-window arms get an infinite bonus, so every arm is tried
    at least once; ties break toward the lowest arm index.
    """

    def __init__(self, n_arms: int, window: int, c: float):
        self.n_arms = n_arms
        self.window: deque = deque(maxlen=window)
        self.c = c

    def select(self) -> int:
        counts = np.zeros(self.n_arms)
        rewards = np.zeros(self.n_arms)
        for arm, reward in self.window:
            counts[arm] += 1
            rewards[arm] += reward
        scores = np.full(self.n_arms, math.inf)
        played = counts > 0
        if played.any():
            t = len(self.window) + 1
            scores[played] = rewards[played] / counts[played] + self.c * np.sqrt(
                2.0 * math.log(t) / counts[played]
            )
        return int(np.argmax(scores))

    def update(self, arm: int, reward: float) -> None:
        self.window.append((arm, reward))


def run_composite(
    bounds: Bounds,
    config: CompositeConfig,
    evaluator,
    fitness: Optional[FitnessCurve] = None,
) -> StrategyRun:
    """Bandit loop; arms maximize acc - fitness(rate) (accuracy if no curve)."""
    if config.n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if not config.arms:
        raise ValueError("at least one arm must be enabled")
    rng = np.random.default_rng(config.seed)
    run = StrategyRun("composite", config.seed, asdict(config))
    arms = [make_arm(name, bounds, rng) for name in config.arms]
    bandit = SlidingWindowUCB(len(arms), config.window, config.ucb_c)
    selections = np.zeros(len(arms), dtype=np.int64)
    state = {}

    def y_of(point) -> float:
        if fitness is None:
            return point.accuracy
        return point.accuracy - fitness(point.compression_rate)

    def propose(i: int) -> QTable:
        k = bandit.select()
        state["arm"] = k
        state["x"] = arms[k].propose()
        selections[k] += 1
        return QTable(state["x"].reshape(8, 8))

    def observe(i: int, point, improved: bool) -> None:
        k = state["arm"]
        arms[k].observe(state["x"], y_of(point))
        bandit.update(k, 1.0 if improved else 0.0)

    run_trials(run, config.n_trials, propose, evaluator,
               observe=observe, y_of=y_of)
    run.config["arm_selection_counts"] = {
        name: int(c) for name, c in zip(config.arms, selections)
    }
    return run
