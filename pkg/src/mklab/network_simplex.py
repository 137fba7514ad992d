"""Primal network simplex for bipartite transportation problems.

Forbidden pairs are deleted variables: only finite-cost arcs exist in
the model.  Feasibility scaffolding is a root node joined to every real
node by a penalized artificial arc; the penalty is computed from the
data (it dominates any dual value a basis can produce), artificial arcs
are never allowed to re-enter the basis, and any artificial flow that
survives at optimality certifies infeasibility.  The basis tree is
rebuilt from the root after every pivot, which keeps the code small and
is cheap at desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    InfeasibleError,
    IterationLimitError,
    MKLabError,
    ShapeError,
    UnboundedError,
)

_DEGENERATE_TOL = 1e-13
_TIE_TOL = 1e-15

#: Bland's rule engages after this many consecutive degenerate pivots
#: per node count.
BLAND_AFTER_DEGENERATE = 10


@dataclass(frozen=True)
class BipartiteFlow:
    flow: np.ndarray          # one value per real arc, in input order
    source_potentials: np.ndarray
    sink_potentials: np.ndarray
    iterations: int
    pivots: int


def solve_bipartite(supplies, demands, tails, heads, costs, *,
                    feasibility_tol: float = 1e-9,
                    optimality_tol: float = 1e-9,
                    max_iterations: int = 10 ** 6) -> BipartiteFlow:
    """Minimize sum(cost * flow) shipping supplies to demands over the arcs.

    ``tails`` index sources, ``heads`` index sinks.  On return the
    potentials (u, v) satisfy u[i] + v[j] <= cost + optimality_tol on
    every arc, with equality on arcs carrying flow (the returned basis).
    """
    supplies = np.asarray(supplies, dtype=float)
    demands = np.asarray(demands, dtype=float)
    tails = np.asarray(tails, dtype=int)
    heads = np.asarray(heads, dtype=int)
    costs = np.asarray(costs, dtype=float)
    m, n = supplies.size, demands.size
    e_real = costs.size
    if tails.shape != (e_real,) or heads.shape != (e_real,):
        raise ShapeError("arc arrays must have equal length")
    if np.any(supplies < 0) or np.any(demands < 0):
        raise MKLabError("negative supply or demand")
    if not np.all(np.isfinite(costs)):
        raise MKLabError("arc costs must be finite (forbidden pairs are deleted, not priced)")

    root = m + n
    n_nodes = m + n + 1
    g_tail = np.concatenate([tails, np.arange(m), np.full(n, root)])
    g_head = np.concatenate([heads + m, np.full(m, root), np.arange(n) + m])
    penalty = 3.0 * (1.0 + float(np.sum(np.abs(costs))))
    g_cost = np.concatenate([costs, np.full(m + n, penalty)])
    n_arcs = e_real + m + n

    flow = np.zeros(n_arcs)
    flow[e_real:e_real + m] = supplies
    flow[e_real + m:] = demands
    basic = np.zeros(n_arcs, dtype=bool)
    basic[e_real:] = True

    parent = np.full(n_nodes, -1, dtype=int)
    parent_arc = np.full(n_nodes, -1, dtype=int)
    depth = np.zeros(n_nodes, dtype=int)
    pi = np.zeros(n_nodes)

    def rebuild_tree() -> None:
        adj: list[list[int]] = [[] for _ in range(n_nodes)]
        for a in np.flatnonzero(basic):
            adj[g_tail[a]].append(a)
            adj[g_head[a]].append(a)
        parent[root] = -1
        parent_arc[root] = -1
        depth[root] = 0
        pi[root] = 0.0
        seen = np.zeros(n_nodes, dtype=bool)
        seen[root] = True
        stack = [root]
        count = 1
        while stack:
            u = stack.pop()
            for a in adj[u]:
                w = g_head[a] if g_tail[a] == u else g_tail[a]
                if seen[w]:
                    continue
                seen[w] = True
                count += 1
                parent[w] = u
                parent_arc[w] = a
                depth[w] = depth[u] + 1
                if g_tail[a] == w:      # arc w -> u is basic: pi_w - pi_u = cost
                    pi[w] = g_cost[a] + pi[u]
                else:                   # arc u -> w is basic: pi_u - pi_w = cost
                    pi[w] = pi[u] - g_cost[a]
                stack.append(w)
        if count != n_nodes:
            raise MKLabError("basis lost spanning-tree structure")  # pragma: no cover

    rebuild_tree()

    rt = g_tail[:e_real]
    rh = g_head[:e_real]
    real_costs = g_cost[:e_real]
    iterations = 0
    pivots = 0
    degenerate_run = 0
    bland = False
    bland_threshold = BLAND_AFTER_DEGENERATE * (m + n)

    while True:
        if iterations >= max_iterations:
            raise IterationLimitError(f"network simplex exceeded {max_iterations} iterations")
        iterations += 1
        if not e_real:
            break
        reduced = real_costs - pi[rt] + pi[rh]
        reduced[basic[:e_real]] = np.inf
        if bland:
            cands = np.flatnonzero(reduced < -optimality_tol)
            if cands.size == 0:
                break
            entering = int(cands[0])
        else:
            entering = int(np.argmin(reduced))
            if reduced[entering] >= -optimality_tol:
                break

        # Cycle created by the entering arc: entering forward, then the
        # tree path from its head up to the meeting node and back down to
        # its tail.  Forward arcs gain flow, backward arcs lose it.
        cycle: list[tuple[int, bool]] = [(entering, True)]
        x = int(g_tail[entering])
        y = int(g_head[entering])
        from_tail: list[tuple[int, bool]] = []
        while x != y:
            if depth[x] >= depth[y]:
                a = int(parent_arc[x])
                from_tail.append((a, g_head[a] == x))
                x = int(parent[x])
            else:
                a = int(parent_arc[y])
                cycle.append((a, g_tail[a] == y))
                y = int(parent[y])
        cycle.extend(from_tail)

        theta = math.inf
        for a, fwd in cycle:
            if not fwd and flow[a] < theta:
                theta = flow[a]
        if not math.isfinite(theta):
            raise UnboundedError("all-forward cycle in a balanced problem")  # pragma: no cover
        leaving = -1
        for a, fwd in cycle:
            if not fwd and flow[a] <= theta + _TIE_TOL and (leaving < 0 or a < leaving):
                leaving = a

        for a, fwd in cycle:
            flow[a] = flow[a] + theta if fwd else flow[a] - theta
        flow[leaving] = 0.0
        basic[leaving] = False
        basic[entering] = True
        rebuild_tree()
        pivots += 1

        if theta <= _DEGENERATE_TOL:
            degenerate_run += 1
            if degenerate_run > bland_threshold:
                bland = True
        else:
            degenerate_run = 0
            bland = False

    if float(np.sum(flow[e_real:])) > feasibility_tol:
        raise InfeasibleError("no feasible shipment avoids the deleted pairs")

    # Recompute the basic flows exactly from the final tree by pushing
    # node excess toward the root, deepest nodes first.
    excess = np.concatenate([supplies, -demands,
                             [float(np.sum(demands) - np.sum(supplies))]])
    flow_exact = np.zeros(n_arcs)
    for v in sorted(range(n_nodes), key=lambda node: -depth[node]):
        if v == root:
            continue
        a = int(parent_arc[v])
        flow_exact[a] = excess[v] if g_tail[a] == v else -excess[v]
        excess[parent[v]] += excess[v]
    if abs(float(excess[root])) > feasibility_tol:
        raise MKLabError("flow conservation failed at the root")  # pragma: no cover
    if float(np.min(flow_exact)) < -feasibility_tol:
        raise MKLabError("negative basic flow after recomputation")  # pragma: no cover
    np.clip(flow_exact, 0.0, None, out=flow_exact)
    if float(np.sum(flow_exact[e_real:])) > feasibility_tol:
        raise InfeasibleError("no feasible shipment avoids the deleted pairs")

    return BipartiteFlow(
        flow=flow_exact[:e_real],
        source_potentials=pi[:m].copy(),
        sink_potentials=-pi[m:m + n],
        iterations=iterations,
        pivots=pivots,
    )
