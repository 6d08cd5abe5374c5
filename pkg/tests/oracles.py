"""Brute-force reference computations, deliberately independent of the package internals."""
import itertools

import numpy as np


def flow_constraints(g, s, t):
    """Dense A x = b over all edges: net outflow +1 at s, -1 at t, 0 elsewhere."""
    A = np.zeros((g.node_count, g.m))
    for e, (u, v) in enumerate(g.edges):
        A[u, e] += 1.0
        A[v, e] -= 1.0
    b = np.zeros(g.node_count)
    b[s], b[t] = 1.0, -1.0
    return A, b


def qp_project(g, s, t, active, mu, y):
    """Projection onto {A x = b, mu <= x_e <= 1 on active, x_e = 0 elsewhere}.

    Enumerates every assignment of the active coordinates to {free, lower, upper},
    solves the equality-constrained least squares on each face and keeps the
    closest feasible candidate.
    """
    A, b = flow_constraints(g, s, t)
    active = sorted(active)
    y = np.asarray(y, dtype=float)
    best, best_d = None, np.inf
    for faces in itertools.product((0, 1, 2), repeat=len(active)):
        x = np.zeros(g.m)
        free = []
        for e, f in zip(active, faces):
            if f == 1:
                x[e] = mu
            elif f == 2:
                x[e] = 1.0
            else:
                free.append(e)
        rhs = b - A @ x
        if free:
            AF = A[:, free]
            lam, *_ = np.linalg.lstsq(AF @ AF.T, AF @ y[free] - rhs, rcond=None)
            x[free] = y[free] - AF.T @ lam
        if np.max(np.abs(A @ x - b)) > 1e-9:
            continue
        xa = x[active]
        if np.any(xa < mu - 1e-12) or np.any(xa > 1 + 1e-12):
            continue
        d = np.sum((x - y) ** 2)
        if d < best_d:
            best, best_d = x, d
    return best


def random_polytope_point(g, paths, rng, support=None):
    """Random convex combination of (a subset of) the given paths."""
    k = len(paths) if support is None else min(support, len(paths))
    picks = rng.choice(len(paths), size=k, replace=False)
    w = rng.dirichlet(np.ones(k))
    return sum(wi * g.indicator(paths[i]) for wi, i in zip(w, picks))


def subset_potential(tables, X):
    """Fractional potential by summing over all 2^n agent subsets per edge."""
    n, m = X.shape
    total = 0.0
    for e in range(m):
        for bits in itertools.product((0, 1), repeat=n):
            prob = 1.0
            for j, bit in enumerate(bits):
                prob *= X[j, e] if bit else 1.0 - X[j, e]
            total += prob * sum(tables[e, i] for i in range(sum(bits) + 1))
    return total


def mix_product_costs(game, mixes):
    """Exact expected per-agent costs by enumerating every joint pure profile of the mixes."""
    expected = np.zeros(game.n)
    for combo in itertools.product(*(m.atoms for m in mixes)):
        prob = np.prod([w for _, w in combo])
        paths = [p for p, _ in combo]
        loads = np.zeros(game.m, dtype=int)
        for p in paths:
            for e in p:
                loads[e] += 1
        for i, p in enumerate(paths):
            expected[i] += prob * sum(game.cost_tables[e, loads[e]] for e in p)
    return expected
