"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from mklab import CostMatrix, Marginal, PlanKind, TransportPlan


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)


def random_marginal(rng: np.random.Generator, size: int) -> Marginal:
    w = rng.uniform(0.1, 1.0, size)
    return Marginal(w / w.sum())


def random_cost(rng: np.random.Generator, m: int, n: int, high: float = 5.0) -> CostMatrix:
    return CostMatrix(rng.uniform(0.0, high, size=(m, n)))


def nw_corner(mu: Marginal, nu: Marginal) -> TransportPlan:
    """Northwest-corner coupling of two marginals."""
    row = mu.weights.copy()
    col = nu.weights.copy()
    mass = np.zeros((row.size, col.size))
    i = j = 0
    while i < row.size and j < col.size:
        t = min(row[i], col[j])
        mass[i, j] = t
        row[i] -= t
        col[j] -= t
        if row[i] <= col[j]:
            i += 1
        else:
            j += 1
    return TransportPlan(mass, PlanKind.EXACT)


def shuffled_coupling(rng: np.random.Generator, mu: Marginal, nu: Marginal) -> TransportPlan:
    """Greedy fill over all cells in a random order; always an exact coupling."""
    row = mu.weights.copy()
    col = nu.weights.copy()
    mass = np.zeros((row.size, col.size))
    cells = [(i, j) for i in range(row.size) for j in range(col.size)]
    rng.shuffle(cells)
    for i, j in cells:
        t = min(row[i], col[j])
        if t > 0:
            mass[i, j] = t
            row[i] -= t
            col[j] -= t
    return TransportPlan(mass, PlanKind.EXACT)


def enumerate_vertex_minimum(cost: CostMatrix, mu: Marginal, nu: Marginal) -> float | None:
    """Brute-force optimum by enumerating all basic solutions (small sizes).

    Walks every spanning tree of the bipartite graph of finite-cost
    cells, solves the tree flows by leaf elimination, and keeps the
    cheapest nonnegative one.  Returns None when no feasible tree exists.
    """
    m, n = cost.shape
    assert m * n <= 16, "oracle is exponential; keep it tiny"
    edges = [(i, j) for i in range(m) for j in range(n)
             if math.isfinite(cost.entries[i, j])]
    best: float | None = None
    need = m + n - 1
    for tree in itertools.combinations(edges, need):
        deg: dict[tuple[str, int], list[tuple[int, int]]] = {}
        for i, j in tree:
            deg.setdefault(("r", i), []).append((i, j))
            deg.setdefault(("c", j), []).append((i, j))
        if len(deg) != m + n:
            continue
        row = mu.weights.copy()
        col = nu.weights.copy()
        remaining = {e: True for e in tree}
        incident = {node: list(es) for node, es in deg.items()}
        flows: dict[tuple[int, int], float] = {}
        ok = True
        changed = True
        while changed and any(remaining.values()):
            changed = False
            for node, es in incident.items():
                live = [e for e in es if remaining[e]]
                if len(live) != 1:
                    continue
                e = live[0]
                i, j = e
                if node[0] == "r":
                    f = row[i]
                    col[j] -= f
                else:
                    f = col[j]
                    row[i] -= f
                flows[e] = f
                remaining[e] = False
                changed = True
        if any(remaining.values()):
            continue  # cyclic edge set, not a tree
        if any(f < -1e-12 for f in flows.values()):
            ok = False
        if not ok:
            continue
        value = sum(cost.entries[i, j] * max(f, 0.0) for (i, j), f in flows.items())
        if best is None or value < best:
            best = value
    return best
