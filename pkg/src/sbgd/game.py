"""Network congestion games: loads, costs, the fractional potential and equilibrium metrics.

Costs are tabulated: ``cost_tables[e, l]`` is the cost of edge ``e`` under load
``l`` for ``l = 0..n``. Fractional profiles are arrays of shape ``(n, m)``
holding each agent's edge marginals; agents are assumed to sample their paths
independently, so per-edge loads are Poisson-binomial.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DivideByZero, TooLarge
from .graph import Dag, Path, enumerate_paths, shortest_path
from .polytope import PathPolytope, project

ENUM_CAP = 10**6


@dataclass(frozen=True, eq=False)
class CongestionGame:
    graph: Dag
    agents: tuple[tuple[int, int], ...]
    cost_tables: np.ndarray
    polytopes: tuple[PathPolytope, ...] = field(init=False, repr=False)

    def __post_init__(self):
        agents = tuple((int(s), int(t)) for s, t in self.agents)
        tables = np.array(self.cost_tables, dtype=float)
        n = len(agents)
        if n < 1:
            raise ValueError("a game needs at least one agent")
        if tables.shape != (self.graph.m, n + 1):
            raise ValueError(f"cost_tables must have shape (m, n+1) = {(self.graph.m, n + 1)}, got {tables.shape}")
        if np.any(tables < 0) or not np.all(np.isfinite(tables)):
            raise ValueError("costs must be finite and nonnegative")
        if np.any(np.diff(tables, axis=1) < 0):
            raise ValueError("every cost function must be nondecreasing in the load")
        tables.setflags(write=False)
        object.__setattr__(self, "agents", agents)
        object.__setattr__(self, "cost_tables", tables)
        object.__setattr__(self, "polytopes", tuple(PathPolytope(self.graph, s, t) for s, t in agents))

    @classmethod
    def affine(cls, graph: Dag, agents, a, b=0.0) -> "CongestionGame":
        """c_e(l) = a_e * l + b_e for l >= 1 and c_e(0) = 0."""
        n = len(agents)
        a = np.broadcast_to(np.asarray(a, dtype=float), (graph.m,))
        b = np.broadcast_to(np.asarray(b, dtype=float), (graph.m,))
        if np.any(a < 0) or np.any(b < 0):
            raise ValueError("affine cost coefficients must be nonnegative")
        loads = np.arange(n + 1)
        tables = a[:, None] * loads[None, :] + b[:, None]
        tables[:, 0] = 0.0
        return cls(graph, agents, tables)

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def m(self) -> int:
        return self.graph.m

    @property
    def c_max(self) -> float:
        return float(self.cost_tables[:, -1].max())

    @property
    def smoothness(self) -> float:
        """Gradient Lipschitz constant 2 n^2 c_max sqrt(m) of the potential."""
        return 2.0 * self.n**2 * self.c_max * math.sqrt(self.m)


def pure_loads(game: CongestionGame, paths: Sequence[Path]) -> np.ndarray:
    loads = np.zeros(game.m, dtype=int)
    for p in paths:
        loads[list(p)] += 1
    return loads


def agent_cost(game: CongestionGame, paths: Sequence[Path]) -> np.ndarray:
    loads = pure_loads(game, paths)
    c = game.cost_tables
    return np.array([sum(c[e, loads[e]] for e in p) for p in paths], dtype=float)


def load_distribution(game: CongestionGame, marginals, exclude_agent: int | None = None) -> np.ndarray:
    """Per-edge distribution of the number of agents on the edge, shape (m, n+1).

    Standard Poisson-binomial convolution, O(n^2 m).
    """
    X = np.asarray(marginals, dtype=float)
    dist = np.zeros((game.m, game.n + 1))
    dist[:, 0] = 1.0
    k = 0
    for j in range(game.n):
        if j == exclude_agent:
            continue
        p = X[j]
        q = 1.0 - p
        new = dist * q[:, None]
        new[:, 1 : k + 2] += dist[:, : k + 1] * p[:, None]
        dist = new
        k += 1
    return dist


def potential(game: CongestionGame, marginals) -> float:
    """Fractional potential: sum_e E[ sum_{i=0}^{L_e} c_e(i) ]."""
    dist = load_distribution(game, marginals)
    cum = np.cumsum(game.cost_tables, axis=1)
    return float(np.sum(dist * cum))


def _expected_unit_costs(game: CongestionGame, marginals, agent: int) -> np.ndarray:
    # E[c_e(1 + L_{-i,e})] for every edge.
    dist = load_distribution(game, marginals, exclude_agent=agent)
    return np.sum(dist[:, :-1] * game.cost_tables[:, 1:], axis=1)


def grad_potential(game: CongestionGame, marginals) -> np.ndarray:
    """d Phi / d x_{i,e} = E[c_e(L_{-i,e} + 1)], zeroed on edges inactive for agent i."""
    grad = np.zeros((game.n, game.m))
    for i, poly in enumerate(game.polytopes):
        grad[i, poly.active_idx] = _expected_unit_costs(game, marginals, i)[poly.active_idx]
    return grad


def expected_agent_cost(game: CongestionGame, marginals, agent: int) -> float:
    X = np.asarray(marginals, dtype=float)
    return float(X[agent] @ _expected_unit_costs(game, X, agent))


def best_response_value(game: CongestionGame, marginals, agent: int) -> tuple[Path, float]:
    s, t = game.agents[agent]
    return shortest_path(game.graph, s, t, _expected_unit_costs(game, marginals, agent))


@dataclass(frozen=True)
class Exploitability:
    absolute: float
    relative: float  # nan when some best-response value is ~0


def exploitability(game: CongestionGame, marginals, strict: bool = False) -> Exploitability:
    """Largest unilateral improvement, absolute and relative to the best-response cost."""
    X = np.asarray(marginals, dtype=float)
    abs_gap = 0.0
    rel_gap = 0.0
    degenerate = False
    for i in range(game.n):
        w = _expected_unit_costs(game, X, i)
        s, t = game.agents[i]
        _, br = shortest_path(game.graph, s, t, w)
        gap = max(0.0, float(X[i] @ w) - br)
        abs_gap = max(abs_gap, gap)
        if br < 1e-12:
            degenerate = True
        else:
            rel_gap = max(rel_gap, gap / br)
    if degenerate:
        if strict:
            raise DivideByZero("best-response value below 1e-12; relative exploitability undefined")
        rel_gap = math.nan
    return Exploitability(abs_gap, rel_gap)


def stationarity_gap(game: CongestionGame, marginals, mu: float) -> float:
    """|| x - P_{X^mu}[x - grad Phi(x) / L] ||_2 with L the smoothness constant."""
    X = np.asarray(marginals, dtype=float)
    step = 1.0 / game.smoothness
    grad = grad_potential(game, X)
    sq = 0.0
    for i, poly in enumerate(game.polytopes):
        moved = project(poly.bounded(mu), X[i] - step * grad[i])
        sq += float(np.sum((X[i] - moved) ** 2))
    return math.sqrt(sq)


def brute_force_pure_ne(game: CongestionGame, eps: float = 0.0, cap: int = ENUM_CAP) -> list[tuple[Path, ...]]:
    """Every pure profile where no agent can gain more than ``eps`` by deviating."""
    strategy_sets = [enumerate_paths(game.graph, s, t, cap) for s, t in game.agents]
    if math.prod(len(ps) for ps in strategy_sets) > cap:
        raise TooLarge(f"more than {cap} pure profiles")
    c = game.cost_tables
    found = []
    for profile in itertools.product(*strategy_sets):
        loads = pure_loads(game, profile)
        stable = True
        for i, p in enumerate(profile):
            own = sum(c[e, loads[e]] for e in p)
            others = loads.copy()
            others[list(p)] -= 1
            best = min(sum(c[e, others[e] + 1] for e in q) for q in strategy_sets[i])
            if own > best + eps:
                stable = False
                break
        if stable:
            found.append(profile)
    return found
