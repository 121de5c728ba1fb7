"""Shared strategy-run machinery: records, trial logs, the trial loop.

A strategy run is a deterministic function of (seed, config, evaluator);
its JSON-lines trial log is byte-identical across reruns. Wall-clock
decision times are kept out of the log for exactly that reason: they go
to a separate timings sidecar consumed by the efficiency report.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional

from ..evaluation import EvalPoint, EvaluatorProtocolError
from ..qtable import QTable
from .frontier import ParetoFrontier

__all__ = [
    "StrategyRun",
    "SearchAborted",
    "run_trials",
    "write_trial_log",
    "write_timings",
    "read_trial_log",
]


@dataclass
class StrategyRun:
    """Everything a finished (or aborted) strategy run produced."""

    strategy: str
    seed: int
    config: dict
    records: List[EvalPoint] = field(default_factory=list)
    ys: List[Optional[float]] = field(default_factory=list)
    decision_times: List[float] = field(default_factory=list)
    frontier: ParetoFrontier = field(default_factory=ParetoFrontier)
    dataset_hash: str = ""

    def header(self) -> dict:
        return {
            "strategy": self.strategy,
            "seed": self.seed,
            "config": self.config,
            "dataset_hash": self.dataset_hash,
        }


class SearchAborted(RuntimeError):
    """Evaluator failure mid-run; `.run` preserves the partial log."""

    def __init__(self, message: str, run: StrategyRun):
        super().__init__(message)
        self.run = run


def run_trials(
    run: StrategyRun,
    n_trials: int,
    propose: Callable[[int], QTable],
    evaluator,
    observe: Optional[Callable[[int, EvalPoint, bool], None]] = None,
    y_of: Optional[Callable[[EvalPoint], float]] = None,
) -> StrategyRun:
    """The common trial loop: propose, evaluate, update frontier, record.

    Only the propose step is timed (decision time excludes evaluation).
    Evaluator protocol failures abort with the partial run attached.
    """
    for i in range(n_trials):
        t0 = time.perf_counter()
        table = propose(i)
        run.decision_times.append(time.perf_counter() - t0)
        try:
            point = evaluator(table, i, run.strategy)
        except EvaluatorProtocolError as exc:
            raise SearchAborted(f"evaluator failed at trial {i}: {exc}", run) from exc
        improved = run.frontier.insert(point)
        run.records.append(point)
        run.ys.append(None if y_of is None else y_of(point))
        if observe is not None:
            observe(i, point, improved)
    return run


# ---------------------------------------------------------------------------
# Trial-log I/O
# ---------------------------------------------------------------------------

def write_trial_log(path, run: StrategyRun) -> None:
    """Header line + one EvalPoint per line, deterministically serialized."""
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(json.dumps({"header": run.header()}, sort_keys=True) + "\n")
        for point, y in zip(run.records, run.ys):
            d = point.to_json_dict()
            if y is not None:
                d["y"] = y
            fh.write(json.dumps(d, sort_keys=True) + "\n")


def write_timings(path, run: StrategyRun) -> None:
    """Wall-clock decision times, one line per trial (non-deterministic)."""
    path = Path(path)
    with open(path, "w") as fh:
        for i, dt in enumerate(run.decision_times):
            fh.write(json.dumps({"trial_index": i, "decision_time": dt}) + "\n")


def read_trial_log(path):
    """Returns (header dict, [EvalPoint], [y or None])."""
    path = Path(path)
    header = None
    points: List[EvalPoint] = []
    ys: List[Optional[float]] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            d = json.loads(line)
            if "header" in d:
                header = d["header"]
                continue
            points.append(EvalPoint.from_json_dict(d))
            ys.append(d.get("y"))
    if header is None:
        raise ValueError(f"{path}: missing header line")
    return header, points, ys
