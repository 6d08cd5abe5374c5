"""Semi-bandit gradient descent with Caratheodory exploration, one agent at a time.

Each round the learner decomposes its fractional point into a distribution
over paths, samples a path, receives the costs of the traversed edges only,
builds an importance-weighted cost estimate and takes a projected gradient
step onto a bounded-away polytope whose floor ``mu_t`` shrinks over time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import FeedbackMismatch
from .graph import Path
from .polytope import (
    PathMix,
    PathPolytope,
    caratheodory_decompose,
    feasible_bounded_point,
    project,
    sample_path,
)

PRESETS = ("default", "regret_optimal", "nash_tuned")
INIT_MODES = ("feasible_construction", "uniform_mix")


@dataclass(frozen=True)
class Schedule:
    """Step sizes gamma_t and exploration floors mu_t.

    ``m`` is the total number of edges, ``m_i`` the agent's active edges and
    ``n`` the number of agents. ``c_gamma``/``c_mu`` override the constants in
    front of t^{-3/5} and t^{-1/5} (``nash_tuned`` derives them from n, m, c_max
    when left unset; ``default`` uses 1).
    """

    preset: str = "default"
    m: int = 1
    m_i: int = 1
    n: int = 1
    c_max: float = 1.0
    c_gamma: float | None = None
    c_mu: float | None = None

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValueError(f"unknown schedule preset {self.preset!r}; expected one of {PRESETS}")
        if self.m < 1 or self.m_i < 1 or self.n < 1:
            raise ValueError("m, m_i and n must be positive")
        if not self.c_max > 0:
            raise ValueError("c_max must be positive")

    def _constants(self) -> tuple[float, float]:
        if self.preset == "nash_tuned":
            cg = (self.m**0.8 * self.n**1.6 * self.c_max) ** -1
            cm = (self.n**1.2 * self.m**1.1) ** -1
        elif self.preset == "regret_optimal":
            cg = 1.0 / (self.c_max * math.sqrt(self.m))
            cm = 1.0 / math.sqrt(self.m)
        else:
            cg, cm = 1.0, 1.0
        if self.c_gamma is not None:
            cg = self.c_gamma
        if self.c_mu is not None:
            cm = self.c_mu
        return cg, cm

    def gamma(self, t: int) -> float:
        cg, _ = self._constants()
        exponent = 0.75 if self.preset == "regret_optimal" else 0.6
        return cg * t**-exponent

    def mu(self, t: int) -> float:
        if t <= 1:
            return 1.0 / self.m_i
        _, cm = self._constants()
        exponent = 0.25 if self.preset == "regret_optimal" else 0.2
        return min(1.0 / self.m_i, cm * t**-exponent)

    @classmethod
    def for_polytope(cls, poly: PathPolytope, preset: str = "default", n: int = 1,
                     c_max: float = 1.0, **overrides) -> "Schedule":
        return cls(preset=preset, m=poly.graph.m, m_i=poly.n_active, n=n, c_max=c_max, **overrides)


class Learner:
    """Mutable per-agent state: current point, round counter and last decision."""

    def __init__(self, polytope: PathPolytope, schedule: Schedule, x: np.ndarray, agent_id: int = 0):
        self.agent_id = agent_id
        self.polytope = polytope
        self.schedule = schedule
        self.t = 1
        self.view = polytope.bounded(schedule.mu(1))
        self.x = np.asarray(x, dtype=float)
        self.last_mix: PathMix | None = None
        self.last_path: Path | None = None

    @property
    def mu(self) -> float:
        return self.view.mu

    def choose(self, rng: np.random.Generator) -> Path:
        self.last_mix = caratheodory_decompose(self.polytope, self.x, check=False)
        self.last_path = sample_path(self.last_mix, rng)
        return self.last_path

    def estimate_costs(self, observed: Mapping[int, float] | Iterable[tuple[int, float]]) -> np.ndarray:
        """Importance-weighted estimate c_e / x_e on traversed edges, zero elsewhere."""
        pairs = dict(observed.items() if isinstance(observed, Mapping) else observed)
        if self.last_path is None or set(pairs) != set(self.last_path):
            raise FeedbackMismatch(
                f"feedback covers edges {sorted(pairs)} but the last path was {self.last_path}"
            )
        c_hat = np.zeros(self.polytope.graph.m)
        for e, cost in pairs.items():
            c_hat[e] = cost / self.x[e]
        return c_hat

    def update(self, c_hat) -> "Learner":
        target = self.x - self.schedule.gamma(self.t) * np.asarray(c_hat, dtype=float)
        self.t += 1
        mu_next = self.schedule.mu(self.t)
        if mu_next != self.view.mu:
            self.view = self.polytope.bounded(mu_next)
        self.x = project(self.view, target)
        return self

    def step(self, observed_costs: np.ndarray) -> np.ndarray:
        """Estimate from full cost vector restricted to the last path, then update."""
        c_hat = np.zeros(self.polytope.graph.m)
        idx = list(self.last_path)
        c_hat[idx] = observed_costs[idx] / self.x[idx]
        self.update(c_hat)
        return c_hat


def _random_path(poly: PathPolytope, rng: np.random.Generator) -> Path:
    path = []
    u = poly.source
    while u != poly.sink:
        choices = poly._out[u]
        e = choices[int(rng.integers(len(choices)))]
        path.append(e)
        u = poly.graph.heads[e]
    return tuple(path)


def init_learner(polytope: PathPolytope, schedule: Schedule, init_mode: str = "feasible_construction",
                 rng: np.random.Generator | None = None, agent_id: int = 0) -> Learner:
    view = polytope.bounded(1.0 / polytope.n_active)
    if init_mode == "feasible_construction":
        x = feasible_bounded_point(view)
    elif init_mode == "uniform_mix":
        if rng is None:
            raise ValueError("uniform_mix initialisation needs an rng")
        x = np.zeros(polytope.graph.m)
        for _ in range(polytope.n_active):
            x[list(_random_path(polytope, rng))] += 1.0
        x = project(view, x / polytope.n_active)
    else:
        raise ValueError(f"unknown init mode {init_mode!r}; expected one of {INIT_MODES}")
    return Learner(polytope, schedule, x, agent_id)


def choose(state: Learner, rng: np.random.Generator) -> Path:
    return state.choose(rng)


def estimate_costs(state: Learner, observed) -> np.ndarray:
    return state.estimate_costs(observed)


def update(state: Learner, c_hat) -> Learner:
    return state.update(c_hat)

