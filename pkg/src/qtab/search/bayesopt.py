"""Bayesian optimization of the scalarized objective y = acc - fitness(rate).

Each proposal screens a large batch of uniform in-bounds candidates by
expected improvement, then (optionally) refines the winner with rounds of
local grid search over a few randomly chosen cells in the low+mid
frequency area of interest. Exhaustive enumeration at full integer
resolution is intractable for even 5 cells, so each grid uses a fixed
number of evenly spaced levels spanning the cell's bound interval.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, asdict

import numpy as np

from ..qtable import Bounds, FrequencyBands, QTable
from .base import StrategyRun, run_trials
from .frontier import FitnessCurve
from .gp import Matern52GP, expected_improvement

__all__ = ["BayesOptConfig", "bo_propose", "run_bayesopt"]

_EI_CHUNK = 20_000


@dataclass(frozen=True)
class BayesOptConfig:
    n_trials: int
    seed: int = 0
    n_init_candidates: int = 100_000
    n_rounds: int = 20
    n_indices: int = 5
    use_local_grid: bool = True
    grid_levels: int = 9
    n_seed_points: int = 5
    refit_every: int = 5


class _Scaler:
    """Maps integer tables into [0,1]^64 by the bound box."""

    def __init__(self, bounds: Bounds):
        self.lower = bounds.lower.reshape(64)
        self.upper = bounds.upper.reshape(64)
        self.width = np.maximum(self.upper - self.lower, 1e-12)

    def scale(self, flat: np.ndarray) -> np.ndarray:
        return (flat - self.lower) / self.width


def _best_by_ei(model: Matern52GP, scaler: _Scaler, cands: np.ndarray, best_y: float):
    """Max-EI row of an (n, 64) integer candidate array."""
    best_val = -np.inf
    best_row = cands[0]
    for start in range(0, cands.shape[0], _EI_CHUNK):
        chunk = cands[start:start + _EI_CHUNK]
        mean, var = model.posterior(scaler.scale(chunk.astype(np.float64)))
        ei = expected_improvement(mean, var, best_y)
        i = int(np.argmax(ei))
        if ei[i] > best_val:
            best_val = float(ei[i])
            best_row = chunk[i]
    return best_row, best_val


def bo_propose(
    model: Matern52GP,
    bounds: Bounds,
    bands: FrequencyBands,
    config: BayesOptConfig,
    rng: np.random.Generator,
    best_y: float,
) -> QTable:
    """Next table to probe: EI screening plus local grid refinement."""
    if model.n_observations < 1:
        raise ValueError("surrogate needs at least one observation")
    scaler = _Scaler(bounds)
    lower = bounds.lower.reshape(64)
    upper = bounds.upper.reshape(64)

    cands = bounds.round_clamp(
        rng.uniform(lower, upper, size=(config.n_init_candidates, 64))
    ).reshape(-1, 64)
    x_max, ei_max = _best_by_ei(model, scaler, cands, best_y)

    if config.use_local_grid:
        interest = [
            r * 8 + c for r, c in bands.raster_cells(bands.area_of_interest)
        ]
        n_pick = min(config.n_indices, len(interest))
        for _ in range(config.n_rounds):
            cells = rng.choice(interest, size=n_pick, replace=False)
            level_sets = []
            for cell in cells:
                levels = np.unique(
                    np.clip(
                        np.rint(np.linspace(lower[cell], upper[cell], config.grid_levels)),
                        1, 255,
                    ).astype(np.int32)
                )
                level_sets.append(levels)
            combos = np.array(list(itertools.product(*level_sets)), dtype=np.int32)
            grid = np.repeat(x_max[None, :], combos.shape[0], axis=0)
            grid[:, cells] = combos
            row, val = _best_by_ei(model, scaler, grid, best_y)
            if val > ei_max:
                ei_max = val
                x_max = row
    return QTable(x_max.reshape(8, 8))


def run_bayesopt(
    bounds: Bounds,
    bands: FrequencyBands,
    fitness: FitnessCurve,
    config: BayesOptConfig,
    evaluator,
) -> StrategyRun:
    """Seed with a few bounded-random points, then the BO loop."""
    if config.n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    rng = np.random.default_rng(config.seed)
    run = StrategyRun("bayesopt", config.seed, asdict(config))
    model = Matern52GP()
    scaler = _Scaler(bounds)
    xs: list = []
    ys: list = []

    def y_of(point) -> float:
        return point.accuracy - fitness(point.compression_rate)

    def propose(i: int) -> QTable:
        if i < min(config.n_seed_points, config.n_trials):
            return bounds.sample_table(rng)
        if len(ys) == config.n_seed_points or len(ys) % config.refit_every == 0:
            model.refit_hyperparameters(np.array(xs), np.array(ys))
        else:
            model.fit(np.array(xs), np.array(ys))
        return bo_propose(model, bounds, bands, config, rng, max(ys))

    def observe(i: int, point, improved: bool) -> None:
        xs.append(scaler.scale(point.qtable.entries.reshape(64).astype(np.float64)))
        ys.append(y_of(point))

    return run_trials(run, config.n_trials, propose, evaluator,
                      observe=observe, y_of=y_of)
