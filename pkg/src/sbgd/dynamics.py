"""Simulation loops: all agents learning in a congestion game, or one agent against an adversary.

Randomness is split up front from a single master seed: one substream per
agent and one for the adversary. Metric computation never touches these
streams, so changing the metric stride does not change trajectories.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateSeries
from .game import CongestionGame, exploitability, potential, pure_loads, stationarity_gap
from .graph import shortest_path
from .learner import Learner, Schedule, init_learner
from .polytope import PathPolytope


def default_stride(T: int) -> int:
    return max(1, T // 500)


@dataclass
class RoundRecord:
    t: int
    realized_cost: np.ndarray
    cum_cost: np.ndarray
    # Filled on metric rounds only (every ``metric_stride`` rounds and at T).
    regret: np.ndarray | None = None
    edge_cum_cost: np.ndarray | None = None
    exploit_abs: float | None = None
    exploit_rel: float | None = None
    exploit_abs_avg: float | None = None
    exploit_rel_avg: float | None = None
    potential: float | None = None
    stat_gap: float | None = None
    x_avg: np.ndarray | None = None
    wall_time: float = 0.0

    @property
    def has_metrics(self) -> bool:
        return self.regret is not None

    @property
    def avg_regret(self) -> np.ndarray | None:
        return None if self.regret is None else self.regret / self.t


def spawn_streams(seed: int, count: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def default_schedules(game: CongestionGame, preset: str = "default", **overrides) -> list[Schedule]:
    return [
        Schedule.for_polytope(poly, preset, n=game.n, c_max=game.c_max, **overrides)
        for poly in game.polytopes
    ]


def run_dynamics(
    game: CongestionGame,
    schedules: Sequence[Schedule] | None,
    T: int,
    seed: int,
    metric_stride: int | None = None,
    init_mode: str = "feasible_construction",
    with_stationarity: bool = True,
) -> list[RoundRecord]:
    """Every agent runs its own learner; each sees only the costs on its own path."""
    if T < 1:
        raise ValueError("T must be at least 1")
    stride = default_stride(T) if metric_stride is None else int(metric_stride)
    if stride < 1:
        raise ValueError("metric_stride must be at least 1")
    if schedules is None:
        schedules = default_schedules(game)
    n, m = game.n, game.m
    rngs = spawn_streams(seed, n + 1)
    learners = [
        init_learner(poly, sched, init_mode, rngs[i], agent_id=i)
        for i, (poly, sched) in enumerate(zip(game.polytopes, schedules))
    ]
    tables = game.cost_tables
    edge_ids = np.arange(m)
    x_sum = np.zeros((n, m))
    cf_cum = np.zeros((n, m))
    cum = np.zeros(n)
    records = []
    start = time.perf_counter()

    for t in range(1, T + 1):
        X = np.stack([lr.x for lr in learners])
        x_sum += X
        metric_round = t % stride == 0 or t == T
        if metric_round:
            now = _profile_metrics(game, X, x_sum / t, learners, with_stationarity)

        # Round barrier: every choice is made before any feedback is revealed.
        paths = [lr.choose(rngs[i]) for i, lr in enumerate(learners)]
        loads = pure_loads(game, paths)
        edge_costs = tables[edge_ids, loads]
        realized = np.array([edge_costs[list(p)].sum() for p in paths])
        cum = cum + realized
        for i, p in enumerate(paths):
            own = np.zeros(m, dtype=int)
            own[list(p)] = 1
            # Cost agent i would have paid on each edge had it been on it this round.
            cf_cum[i] += tables[edge_ids, loads - own + 1]
        # Semi-bandit feedback: each agent hears only the edges it traversed.
        for lr, p in zip(learners, paths):
            lr.update(lr.estimate_costs([(e, edge_costs[e]) for e in p]))

        rec = RoundRecord(t, realized, cum)
        if metric_round:
            rec.regret = np.array([
                cum[i] - shortest_path(game.graph, s, tt, cf_cum[i])[1]
                for i, (s, tt) in enumerate(game.agents)
            ])
            rec.edge_cum_cost = cf_cum.copy()
            rec.x_avg = x_sum / t
            for key, value in now.items():
                setattr(rec, key, value)
            rec.wall_time = time.perf_counter() - start
        records.append(rec)
    return records


def _profile_metrics(game, X, X_avg, learners: Sequence[Learner], with_stationarity: bool) -> dict:
    cur = exploitability(game, X)
    avg = exploitability(game, X_avg)
    mu = min(lr.mu for lr in learners)
    return {
        "exploit_abs": cur.absolute,
        "exploit_rel": cur.relative,
        "exploit_abs_avg": avg.absolute,
        "exploit_rel_avg": avg.relative,
        "potential": potential(game, X),
        "stat_gap": stationarity_gap(game, X, mu) if with_stationarity else math.nan,
    }


@dataclass
class AdversarySpec:
    """Source of per-round edge cost vectors for single-agent runs.

    kinds:
      ``fixed_sequence``  data = array (T, m) of cost vectors
      ``iid_random``      data = {"low": a, "high": b}, uniform per edge and round
      ``load_replay``     data = {"loads": (T, m) ints, "cost_tables": (m, n+1)}
      ``adaptive``        data = callable(t, path, m) -> cost vector, sees the sampled path
    """

    kind: str
    data: object
    c_max: float = field(init=False)

    def __post_init__(self):
        if self.kind == "fixed_sequence":
            self.data = np.asarray(self.data, dtype=float)
            self.c_max = float(self.data.max())
            self._check(self.data)
        elif self.kind == "iid_random":
            low, high = float(self.data.get("low", 0.0)), float(self.data.get("high", 1.0))
            if not 0 <= low <= high:
                raise ValueError("iid_random needs 0 <= low <= high")
            self.data = {"low": low, "high": high}
            self.c_max = high
        elif self.kind == "load_replay":
            loads = np.asarray(self.data["loads"], dtype=int)
            tables = np.asarray(self.data["cost_tables"], dtype=float)
            self.data = {"loads": loads, "cost_tables": tables}
            self.c_max = float(tables.max())
            self._check(tables)
        elif self.kind == "adaptive":
            if not callable(self.data):
                raise ValueError("adaptive adversary data must be callable")
            self.c_max = float("inf")
        else:
            raise ValueError(f"unknown adversary kind {self.kind!r}")
        if self.c_max <= 0:
            self.c_max = 1.0

    @staticmethod
    def _check(costs):
        if np.any(costs < 0) or not np.all(np.isfinite(costs)):
            raise ValueError("adversary costs must be finite and nonnegative")

    def costs(self, t: int, m: int, rng: np.random.Generator, path=None) -> np.ndarray:
        if self.kind == "fixed_sequence":
            if t > len(self.data):
                raise ValueError(f"fixed sequence has only {len(self.data)} rounds")
            return self.data[t - 1]
        if self.kind == "iid_random":
            return rng.uniform(self.data["low"], self.data["high"], size=m)
        if self.kind == "load_replay":
            loads = self.data["loads"][t - 1]
            return self.data["cost_tables"][np.arange(m), loads]
        c = np.asarray(self.data(t, path, m), dtype=float)
        self._check(c)
        return c


def run_adversarial(
    polytope: PathPolytope,
    schedule: Schedule,
    adversary: AdversarySpec,
    T: int,
    seed: int,
    metric_stride: int | None = None,
    init_mode: str = "feasible_construction",
) -> tuple[list[RoundRecord], float]:
    """One learner against a cost sequence; regret is against the best fixed path in hindsight."""
    if T < 1:
        raise ValueError("T must be at least 1")
    stride = default_stride(T) if metric_stride is None else int(metric_stride)
    g = polytope.graph
    m = g.m
    learner_rng, adv_rng = spawn_streams(seed, 2)
    learner = init_learner(polytope, schedule, init_mode, learner_rng)
    edge_cum = np.zeros(m)
    cum = 0.0
    records = []
    start = time.perf_counter()
    regret = 0.0
    for t in range(1, T + 1):
        path = learner.choose(learner_rng)
        c = adversary.costs(t, m, adv_rng, path)
        idx = list(path)
        realized = float(c[idx].sum())
        cum += realized
        edge_cum += c
        learner.update(learner.estimate_costs([(e, c[e]) for e in idx]))
        rec = RoundRecord(t, np.array([realized]), np.array([cum]))
        if t % stride == 0 or t == T:
            best = shortest_path(g, polytope.source, polytope.sink, edge_cum)[1]
            regret = cum - best
            rec.regret = np.array([regret])
            rec.edge_cum_cost = edge_cum.copy()
            rec.wall_time = time.perf_counter() - start
        records.append(rec)
    return records, regret


def regret_series(records: Sequence[RoundRecord], agent: int = 0) -> list[tuple[int, float]]:
    """(t, R(t)/t) for every metric round."""
    return [(r.t, float(r.regret[agent]) / r.t) for r in records if r.has_metrics]


def fit_rate(series) -> float:
    """Least-squares slope of log(value) against log(t) over the final half of the series."""
    pts = [(float(t), float(v)) for t, v in series]
    if len(pts) < 10:
        raise DegenerateSeries(f"need at least 10 points, got {len(pts)}")
    tail = pts[len(pts) // 2:]
    ts = np.array([p[0] for p in tail])
    vs = np.array([p[1] for p in tail])
    if np.any(vs <= 0) or np.any(ts <= 0) or not np.all(np.isfinite(vs)):
        raise DegenerateSeries("values must be positive and finite to fit a log-log rate")
    slope, _ = np.polyfit(np.log(ts), np.log(vs), 1)
    return float(slope)

