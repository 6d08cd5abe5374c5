"""Path polytopes, their mu-bounded-away restrictions, projection and decomposition.

A point ``x`` of the s-t path polytope is a unit s-t flow on the DAG; ``x_e``
is the probability that edge ``e`` is used. The bounded-away restriction
additionally asks ``x_e >= mu`` on every active edge, which is what forces
every usable edge to be explored.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DecompositionStalled,
    Infeasible,
    MuTooLarge,
    NoPositivePath,
    NotInPolytope,
    ProjectionDiverged,
)
from .graph import EPS_FLOW, Dag, Path, active_edges, find_positive_path

EPS_FEAS = 1e-9
EPS_PROJ = 1e-10
MAX_ITERS = 10_000
# Mu above 1/|active| by less than this still counts as 1/|active| (float slack).
_MU_SLACK = 1e-12


class PathPolytope:
    """Convex hull of the s-t path indicators of ``graph``.

    Inactive edges are pinned to zero, so all linear algebra happens on the
    active coordinates only. The affine projector onto the flow constraints is
    factorized once here and reused by every projection.
    """

    def __init__(self, graph: Dag, source: int, sink: int):
        self.graph = graph
        self.source = int(source)
        self.sink = int(sink)
        self.active = active_edges(graph, self.source, self.sink)
        if not self.active:
            raise NotInPolytope(f"no path from {source} to {sink}")
        self.active_idx = np.array(sorted(self.active), dtype=np.intp)
        self.active_mask = np.zeros(graph.m, dtype=bool)
        self.active_mask[self.active_idx] = True
        self._build_flow_system()
        self._build_support_lists()

    @property
    def n_active(self) -> int:
        return len(self.active_idx)

    def _build_flow_system(self) -> None:
        g = self.graph
        col = {int(e): j for j, e in enumerate(self.active_idx)}
        nodes = sorted({g.tails[e] for e in col} | {g.heads[e] for e in col})
        row = {v: i for i, v in enumerate(nodes)}
        A = np.zeros((len(nodes), len(col)))
        b = np.zeros(len(nodes))
        # Row for v: outflow(v) - inflow(v) = +1 at source, -1 at sink, 0 elsewhere.
        for e, j in col.items():
            A[row[g.tails[e]], j] += 1.0
            A[row[g.heads[e]], j] -= 1.0
        b[row[self.source]] = 1.0
        b[row[self.sink]] = -1.0
        self.flow_matrix = A
        self.flow_rhs = b
        pinv = np.linalg.pinv(A)
        self._affine_map = np.eye(len(col)) - pinv @ A
        self._affine_offset = pinv @ b

    def _build_support_lists(self) -> None:
        g = self.graph
        act = self.active_mask
        self._out = [[e for e in g.out_edges[u] if act[e]] for u in range(g.node_count)]
        self._in = [[e for e in g.in_edges[v] if act[e]] for v in range(g.node_count)]
        self._source_out = np.array(self._out[self.source], dtype=np.intp)

    def bounded(self, mu: float) -> "BoundedAwayView":
        return BoundedAwayView(self, mu)

    def max_mu(self) -> float:
        return 1.0 / self.n_active

    def indicator(self, path: Path) -> np.ndarray:
        return self.graph.indicator(path)

    def flow_residual(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.max(np.abs(self.flow_matrix @ x[self.active_idx] - self.flow_rhs)))

    def contains(self, x, tol: float = EPS_FEAS) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.graph.m,) or not np.all(np.isfinite(x)):
            return False
        if np.any(np.abs(x[~self.active_mask]) > tol):
            return False
        xa = x[self.active_idx]
        if np.any(xa < -tol) or np.any(xa > 1 + tol):
            return False
        return self.flow_residual(x) <= tol

    def __repr__(self) -> str:
        return f"PathPolytope({self.source}->{self.sink}, active={self.n_active})"


@dataclass(frozen=True)
class BoundedAwayView:
    base: PathPolytope
    mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise MuTooLarge(f"mu must be positive, got {self.mu}")
        if self.mu > self.base.max_mu() + _MU_SLACK:
            raise MuTooLarge(
                f"mu={self.mu} exceeds 1/|active| = {self.base.max_mu()}; the polytope would be empty"
            )

    def contains(self, x, tol: float = EPS_FEAS) -> bool:
        if not self.base.contains(x, tol):
            return False
        x = np.asarray(x, dtype=float)
        return bool(np.all(x[self.base.active_idx] >= self.mu - tol))


@dataclass(frozen=True)
class PathMix:
    """A probability distribution over paths (weights sum to one)."""

    atoms: tuple[tuple[Path, float], ...]
    iterations: int = 0

    @property
    def paths(self) -> list[Path]:
        return [p for p, _ in self.atoms]

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms])

    def marginals(self, m: int) -> np.ndarray:
        x = np.zeros(m)
        for path, w in self.atoms:
            x[list(path)] += w
        return x

    def __len__(self) -> int:
        return len(self.atoms)


def feasible_bounded_point(view: BoundedAwayView) -> np.ndarray:
    """Average of one covering path per active edge; every active x_e >= 1/|active|."""
    poly = view.base
    g = poly.graph
    ones = np.ones(g.m)
    x = np.zeros(g.m)
    for e in poly.active_idx:
        path = find_positive_path(g, poly.source, poly.sink, ones, int(e))
        x[list(path)] += 1.0
    return x / poly.n_active


def project(view: BoundedAwayView, y) -> np.ndarray:
    """Euclidean projection of ``y`` onto the bounded-away polytope.

    Dykstra's alternating projection between the affine flow subspace and the
    box [mu, 1] on active coordinates. The returned iterate comes from the box
    step, so the bounds hold exactly and the flow equalities to ~EPS_PROJ.
    """
    poly = view.base
    y = np.asarray(y, dtype=float)
    if y.shape != (poly.graph.m,) or not np.all(np.isfinite(y)):
        raise ValueError("y must be a finite vector with one entry per edge")
    M = poly._affine_map
    c = poly._affine_offset
    lo = view.mu
    x = y[poly.active_idx]
    q = np.zeros_like(x)
    # The affine set needs no Dykstra correction: its increments lie in ker(M).
    for _ in range(MAX_ITERS):
        z = M.dot(x)
        z += c
        xn = z + q
        np.maximum(xn, lo, out=xn)
        np.minimum(xn, 1.0, out=xn)
        q += z
        q -= xn
        # A frozen box iterate alone is not convergence: q may still be moving.
        step = np.abs(xn - x).max()
        x = xn
        if step < EPS_PROJ and np.abs(xn - z).max() < EPS_PROJ:
            break
    else:
        resid = float(np.max(np.abs(poly.flow_matrix @ x - poly.flow_rhs)))
        if resid > 1e-6:
            raise ProjectionDiverged(f"no convergence after {MAX_ITERS} sweeps (flow residual {resid:.2e})")
    out = np.zeros(poly.graph.m)
    out[poly.active_idx] = x
    return out


def project_simplex_lb(y, mu: float) -> np.ndarray:
    """Exact projection onto {x : sum(x) = 1, x >= mu} by sorting."""
    y = np.asarray(y, dtype=float)
    n = y.size
    if mu * n > 1 + _MU_SLACK:
        raise Infeasible(f"mu*n = {mu * n} > 1")
    radius = 1.0 - mu * n
    if radius <= 0.0:
        return np.full(n, mu)
    v = y - mu
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - radius
    ks = np.arange(1, n + 1)
    rho = np.nonzero(u - css / ks > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0) + mu


def epsilon_greedy_simplex(x, eps: float) -> np.ndarray:
    """Mix ``x`` with the uniform distribution: (1 - eps) x + eps / n."""
    x = np.asarray(x, dtype=float)
    return (1.0 - eps) * x + eps / x.size


def caratheodory_decompose(poly: PathPolytope, x, check: bool = True) -> PathMix:
    """Write ``x`` as a convex combination of at most |E| paths.

    Repeatedly routes a path through the smallest positive edge of the
    residual flow and peels that edge's mass off the path. Residues at or
    below EPS_FLOW are treated as zero.
    """
    x = np.asarray(x, dtype=float)
    if check and not poly.contains(x, EPS_FEAS):
        raise NotInPolytope("point violates the path polytope constraints")
    m = poly.graph.m
    res = [0.0] * m
    for e in poly.active_idx.tolist():
        v = float(x[e])
        if v > EPS_FLOW:
            res[e] = v
    positive = [e for e in range(m) if res[e] > 0.0]
    src = poly._out[poly.source]
    atoms: list[tuple[Path, float]] = []
    iterations = 0
    while sum(res[e] for e in src) > EPS_FLOW:
        iterations += 1
        if iterations > m:
            raise DecompositionStalled(f"exceeded {m} iterations")
        # positive is sorted by id, so min() keeps the lowest id among ties.
        e_min = min(positive, key=res.__getitem__)
        x_min = res[e_min]
        try:
            path = _route_through(poly, res, e_min)
        except NoPositivePath:
            if x_min > EPS_FEAS:
                raise
            # Float dust left stranded by conservation error within tolerance.
            res[e_min] = 0.0
            positive.remove(e_min)
            continue
        for e in path:
            r = res[e] - x_min
            res[e] = r if r > EPS_FLOW else 0.0
        res[e_min] = 0.0
        positive = [e for e in positive if res[e] > 0.0]
        atoms.append((path, x_min))
    return PathMix(tuple(atoms), iterations)


def _route_through(poly: PathPolytope, res: list[float], e_req: int) -> Path:
    # Same contract as graph.find_positive_path, specialised to the cached
    # active adjacency since this runs once per decomposition step.
    g = poly.graph
    u, v = g.tails[e_req], g.heads[e_req]
    head = _dfs(poly._out, g.heads, res, poly.source, u)
    tail = _dfs(poly._out, g.heads, res, v, poly.sink)
    if head is None or tail is None:
        raise NoPositivePath(
            f"no positive-support path through edge {e_req}; flow conservation is violated"
        )
    return tuple(head + [e_req] + tail)


def _dfs(out_lists, heads, res, start: int, goal: int) -> list[int] | None:
    """Lowest-id-first DFS over positive edges; dead nodes are memoised."""
    if start == goal:
        return []
    dead = set()
    path: list[int] = []
    nodes = [start]
    cursor = [0]
    while nodes:
        u = nodes[-1]
        outs = out_lists[u]
        i = cursor[-1]
        while i < len(outs):
            e = outs[i]
            i += 1
            if res[e] > 0.0 and heads[e] not in dead:
                break
        else:
            dead.add(u)
            nodes.pop()
            cursor.pop()
            if path:
                path.pop()
            continue
        cursor[-1] = i
        w = heads[e]
        path.append(e)
        if w == goal:
            return path
        nodes.append(w)
        cursor.append(0)
    return None


def sample_path(mix: PathMix, rng: np.random.Generator) -> Path:
    """Draw one atom with probability equal to its weight (one uniform draw)."""
    u = rng.random()
    weights = mix.weights
    cum = np.cumsum(weights)
    i = int(np.searchsorted(cum, u * cum[-1], side="right"))
    return mix.atoms[min(i, len(mix.atoms) - 1)][0]
