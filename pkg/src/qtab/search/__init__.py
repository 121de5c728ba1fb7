"""Q-table search strategies and Pareto frontier tooling."""

from .frontier import (
    ParetoFrontier,
    FitnessCurve,
    FitnessFitError,
    fit_fitness,
    good_point,
)
from .base import StrategyRun, SearchAborted, write_trial_log, write_timings, read_trial_log
from .random_search import (
    SortedRandomConfig,
    BoundedRandomConfig,
    run_sorted_random,
    run_bounded_random,
)
from .gp import Matern52GP, GPFitError, expected_improvement
from .bayesopt import BayesOptConfig, bo_propose, run_bayesopt
from .composite import CompositeConfig, SlidingWindowUCB, run_composite, DEFAULT_ARMS

__all__ = [
    "ParetoFrontier",
    "FitnessCurve",
    "FitnessFitError",
    "fit_fitness",
    "good_point",
    "StrategyRun",
    "SearchAborted",
    "write_trial_log",
    "write_timings",
    "read_trial_log",
    "SortedRandomConfig",
    "BoundedRandomConfig",
    "run_sorted_random",
    "run_bounded_random",
    "Matern52GP",
    "GPFitError",
    "expected_improvement",
    "BayesOptConfig",
    "bo_propose",
    "run_bayesopt",
    "CompositeConfig",
    "SlidingWindowUCB",
    "run_composite",
    "DEFAULT_ARMS",
]
