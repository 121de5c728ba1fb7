"""Ask/tell heuristic optimizers over the 64-dim integer box.

Each arm proposes one table at a time and is told the scalar objective
afterwards, which is what the bandit's one-trial-per-step protocol
requires. All proposals are rounded and clamped into the bound box.
Population methods (PSO, DE) advance one member per ask; Nelder-Mead is
a sequential state machine restarted from random simplices when the
current one collapses.
"""

from __future__ import annotations

import numpy as np

from ..qtable import Bounds

__all__ = ["make_arm", "ARM_NAMES", "GreedyMutation", "SimulatedAnnealing",
           "DifferentialEvolution", "ParticleSwarm", "NelderMead"]


class _ArmBase:
    name = "arm"

    def __init__(self, bounds: Bounds, rng: np.random.Generator):
        self.lower = bounds.lower.reshape(64)
        self.upper = bounds.upper.reshape(64)
        self.bounds = bounds
        self.rng = rng

    def _clamp(self, x: np.ndarray) -> np.ndarray:
        return np.clip(np.rint(x), np.maximum(np.rint(self.lower), 1),
                       np.minimum(np.rint(self.upper), 255)).astype(np.int32)

    def _uniform(self) -> np.ndarray:
        return self._clamp(self.rng.uniform(self.lower, self.upper))

    def propose(self) -> np.ndarray:
        raise NotImplementedError

    def observe(self, x: np.ndarray, y: float) -> None:
        raise NotImplementedError


class GreedyMutation(_ArmBase):
    """Mutate 1-5 entries of the incumbent best to fresh in-bounds values."""

    name = "greedy_mutation"

    def __init__(self, bounds, rng):
        super().__init__(bounds, rng)
        self.best_x = None
        self.best_y = -np.inf

    def propose(self) -> np.ndarray:
        if self.best_x is None:
            return self._uniform()
        x = self.best_x.copy().astype(np.float64)
        k = int(self.rng.integers(1, 6))
        idx = self.rng.choice(64, size=k, replace=False)
        x[idx] = self.rng.uniform(self.lower[idx], self.upper[idx])
        return self._clamp(x)

    def observe(self, x, y):
        if y > self.best_y:
            self.best_y = y
            self.best_x = np.asarray(x).copy()


class SimulatedAnnealing(_ArmBase):
    """Single-entry +/-delta moves, delta geometric with temperature."""

    name = "simulated_annealing"

    def __init__(self, bounds, rng, t0: float = 1.0, alpha: float = 0.995):
        super().__init__(bounds, rng)
        self.temperature = t0
        self.alpha = alpha
        self.cur_x = None
        self.cur_y = -np.inf
        self._y_scale = 1e-3
        self._seen = []

    def propose(self) -> np.ndarray:
        if self.cur_x is None:
            return self._uniform()
        x = self.cur_x.astype(np.float64).copy()
        i = int(self.rng.integers(64))
        span = max(self.upper[i] - self.lower[i], 1.0)
        mean_step = 1.0 + self.temperature * span / 4.0
        delta = self.rng.geometric(1.0 / mean_step)
        x[i] += delta if self.rng.random() < 0.5 else -delta
        return self._clamp(x)

    def observe(self, x, y):
        self._seen.append(y)
        if len(self._seen) > 5:
            self._y_scale = max(float(np.std(self._seen[-50:])), 1e-6)
        if self.cur_x is None or y >= self.cur_y:
            accept = True
        else:
            gap = (y - self.cur_y) / (self.temperature * self._y_scale + 1e-12)
            accept = self.rng.random() < np.exp(gap)
        if accept:
            self.cur_x = np.asarray(x).copy()
            self.cur_y = y
        self.temperature *= self.alpha


class DifferentialEvolution(_ArmBase):
    """rand/1/bin with F=0.5, CR=0.9 over a population of 32."""

    name = "differential_evolution"

    def __init__(self, bounds, rng, pop_size: int = 32, f: float = 0.5,
                 cr: float = 0.9):
        super().__init__(bounds, rng)
        self.pop_size = pop_size
        self.f = f
        self.cr = cr
        self.pop: list = []
        self.fitness: list = []
        self.cursor = 0

    def propose(self) -> np.ndarray:
        if len(self.pop) < self.pop_size:
            return self._uniform()
        i = self.cursor
        a, b, c = self.rng.choice(
            [j for j in range(self.pop_size) if j != i], size=3, replace=False
        )
        mutant = (
            self.pop[a].astype(np.float64)
            + self.f * (self.pop[b].astype(np.float64) - self.pop[c].astype(np.float64))
        )
        cross = self.rng.random(64) < self.cr
        cross[int(self.rng.integers(64))] = True
        trial = np.where(cross, mutant, self.pop[i].astype(np.float64))
        return self._clamp(trial)

    def observe(self, x, y):
        x = np.asarray(x).copy()
        if len(self.pop) < self.pop_size:
            self.pop.append(x)
            self.fitness.append(y)
            return
        i = self.cursor
        if y >= self.fitness[i]:
            self.pop[i] = x
            self.fitness[i] = y
        self.cursor = (self.cursor + 1) % self.pop_size


class ParticleSwarm(_ArmBase):
    """16 particles, inertia 0.72, cognitive/social 1.49, integer rounding."""

    name = "particle_swarm"

    def __init__(self, bounds, rng, n_particles: int = 16, inertia: float = 0.72,
                 cognitive: float = 1.49, social: float = 1.49):
        super().__init__(bounds, rng)
        self.n_particles = n_particles
        self.inertia = inertia
        self.cognitive = cognitive
        self.social = social
        self.pos: list = []
        self.vel: list = []
        self.pbest_x: list = []
        self.pbest_y: list = []
        self.gbest_x = None
        self.gbest_y = -np.inf
        self.cursor = 0
        self._pending = None

    def propose(self) -> np.ndarray:
        if len(self.pos) < self.n_particles:
            x = self._uniform().astype(np.float64)
            self._pending = ("init", x)
            return self._clamp(x)
        k = self.cursor
        r1 = self.rng.random(64)
        r2 = self.rng.random(64)
        vel = (
            self.inertia * self.vel[k]
            + self.cognitive * r1 * (self.pbest_x[k] - self.pos[k])
            + self.social * r2 * (self.gbest_x - self.pos[k])
        )
        pos = np.clip(self.pos[k] + vel, self.lower, self.upper)
        self._pending = ("move", k, pos, vel)
        return self._clamp(pos)

    def observe(self, x, y):
        if self._pending is None:
            return
        if self._pending[0] == "init":
            pos = self._pending[1]
            self.pos.append(pos)
            self.vel.append(np.zeros(64))
            self.pbest_x.append(pos.copy())
            self.pbest_y.append(y)
        else:
            _, k, pos, vel = self._pending
            self.pos[k] = pos
            self.vel[k] = vel
            if y > self.pbest_y[k]:
                self.pbest_y[k] = y
                self.pbest_x[k] = pos.copy()
            self.cursor = (self.cursor + 1) % self.n_particles
        if y > self.gbest_y:
            self.gbest_y = y
            self.gbest_x = np.asarray(self._pending[1] if self._pending[0] == "init"
                                      else self._pending[2]).copy()
        self._pending = None


class NelderMead(_ArmBase):
    """Sequential simplex search restarted from random in-bounds simplices.

    The 64-dim simplex needs 65 vertices, so initialization dominates
    early proposals; after that each ask is a reflect/expand/contract
    step, with shrink handled one vertex evaluation at a time.
    """

    name = "nelder_mead"

    _ALPHA, _GAMMA, _RHO, _SIGMA = 1.0, 2.0, 0.5, 0.5

    def __init__(self, bounds, rng, stall_limit: int = 200):
        super().__init__(bounds, rng)
        self.stall_limit = stall_limit
        self._restart()

    def _restart(self):
        self.vertices: list = []
        self.values: list = []
        self.phase = "init"
        self.init_base = None
        self.pending = None
        self.shrink_queue: list = []
        self.steps = 0

    def _order(self):
        order = np.argsort(-np.array(self.values), kind="stable")
        self.vertices = [self.vertices[i] for i in order]
        self.values = [self.values[i] for i in order]

    def _centroid(self) -> np.ndarray:
        return np.mean(np.stack(self.vertices[:-1]), axis=0)

    def propose(self) -> np.ndarray:
        self.steps += 1
        if self.steps > self.stall_limit or (
            self.phase != "init" and self._collapsed()
        ):
            self._restart()
        if self.phase == "init":
            if self.init_base is None:
                self.init_base = self._uniform().astype(np.float64)
                self.pending = ("init", self.init_base)
                return self._clamp(self.init_base)
            i = len(self.vertices) - 1
            step = 0.10 * (self.upper - self.lower)
            x = self.init_base.copy()
            x[i] = np.clip(x[i] + step[i], self.lower[i], self.upper[i])
            if x[i] == self.init_base[i]:
                x[i] = np.clip(x[i] - step[i], self.lower[i], self.upper[i])
            self.pending = ("init", x)
            return self._clamp(x)
        if self.phase == "shrink":
            i, x = self.shrink_queue[0]
            self.pending = ("shrink", i, x)
            return self._clamp(x)
        self._order()
        centroid = self._centroid()
        worst = self.vertices[-1]
        if self.phase == "reflect":
            x = np.clip(centroid + self._ALPHA * (centroid - worst),
                        self.lower, self.upper)
            self.pending = ("reflect", x)
        elif self.phase == "expand":
            x = np.clip(centroid + self._GAMMA * (self._xr - centroid),
                        self.lower, self.upper)
            self.pending = ("expand", x)
        else:  # contract
            x = np.clip(centroid + self._RHO * (worst - centroid),
                        self.lower, self.upper)
            self.pending = ("contract", x)
        return self._clamp(x)

    def _collapsed(self) -> bool:
        if len(self.vertices) < 65:
            return False
        stack = np.stack([self._clamp(v) for v in self.vertices])
        return np.all(stack.max(axis=0) - stack.min(axis=0) <= 1)

    def observe(self, x, y):
        if self.pending is None:
            return
        kind = self.pending[0]
        if kind == "init":
            self.vertices.append(self.pending[1])
            self.values.append(y)
            if len(self.vertices) == 65:
                self.phase = "reflect"
            self.pending = None
            return
        if kind == "shrink":
            i, xv = self.pending[1], self.pending[2]
            self.vertices[i] = xv
            self.values[i] = y
            self.shrink_queue.pop(0)
            if not self.shrink_queue:
                self.phase = "reflect"
            self.pending = None
            return
        if kind == "reflect":
            self._xr, self._yr = self.pending[1], y
            if y > self.values[0]:
                self.phase = "expand"
            elif y > self.values[-2]:
                self.vertices[-1] = self._xr
                self.values[-1] = y
                self.phase = "reflect"
            else:
                self.phase = "contract"
            self.pending = None
            return
        if kind == "expand":
            if y > self._yr:
                self.vertices[-1] = self.pending[1]
                self.values[-1] = y
            else:
                self.vertices[-1] = self._xr
                self.values[-1] = self._yr
            self.phase = "reflect"
            self.pending = None
            return
        # contract
        if y > self.values[-1]:
            self.vertices[-1] = self.pending[1]
            self.values[-1] = y
            self.phase = "reflect"
        else:
            best = self.vertices[0]
            self.shrink_queue = [
                (i, best + self._SIGMA * (self.vertices[i] - best))
                for i in range(1, 65)
            ]
            self.phase = "shrink"
        self.pending = None


ARM_NAMES = {
    "pso": ParticleSwarm,
    "sa": SimulatedAnnealing,
    "de": DifferentialEvolution,
    "greedy_mutation": GreedyMutation,
    "nelder_mead": NelderMead,
}


def make_arm(name: str, bounds: Bounds, rng: np.random.Generator) -> _ArmBase:
    try:
        cls = ARM_NAMES[name]
    except KeyError:
        raise ValueError(f"unknown arm {name!r}; expected one of {sorted(ARM_NAMES)}")
    return cls(bounds, rng)
