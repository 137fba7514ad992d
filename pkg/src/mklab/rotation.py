"""Cyclic-group rotation models: shift-graph costs and level walks.

The finite model replaces the circle by Z_n and an irrational angle by
a shift s coprime to n: point i stands for i/n and one rotation step
sends i to i + s (mod n), so the whole space is a single orbit.  The
lower half {i : 2i < n} plays the role of [0, 1/2): walking the orbit
gains a level on the lower half and loses one on the upper half, and
the running level of that walk prices the k-step shift graphs.

Everything here is exact integer arithmetic; the shift defaults to the
nearest coprime approximation of the golden-ratio conjugate times n,
the slowest rationally-approximable angle at a given resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (
    CostMatrix,
    InvariantError,
    Marginal,
    PlanKind,
    PotentialPair,
    TransportPlan,
    MAX_SIDE,
    mixture_plan,
)

GOLDEN_CONJUGATE = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class RotationInstance:
    """Z_n with a coprime shift; the discrete stand-in for x -> x + alpha."""

    n: int
    shift: int

    def __post_init__(self) -> None:
        if self.n < 4:
            raise InvariantError("grid size must be at least 4")
        if self.n > MAX_SIDE:
            raise InvariantError(f"grid size {self.n} exceeds the {MAX_SIDE} cap")
        if not (0 < self.shift < self.n):
            raise InvariantError("shift must lie strictly between 0 and n")
        if math.gcd(self.shift, self.n) != 1:
            raise InvariantError(f"gcd({self.shift}, {self.n}) != 1: orbit is not the whole space")

    @property
    def lower_half_size(self) -> int:
        return (self.n + 1) // 2


@dataclass(frozen=True)
class OrbitState:
    """A point of the product space Z_n x Z walked by :func:`skew_step`."""

    position: int
    level: int


def golden_shift(n: int) -> int:
    """The coprime shift closest to n times the golden-ratio conjugate."""
    target = GOLDEN_CONJUGATE * n
    for s in sorted(range(1, n), key=lambda v: (abs(v - target), v)):
        if math.gcd(s, n) == 1:
            return s
    raise InvariantError(f"no coprime shift for n={n}")  # pragma: no cover


def make_instance(n: int, shift: Optional[int] = None) -> RotationInstance:
    return RotationInstance(n=n, shift=golden_shift(n) if shift is None else shift)


def uniform_marginal(inst: RotationInstance) -> Marginal:
    return Marginal(np.full(inst.n, 1.0 / inst.n))


def step_sign(inst: RotationInstance, i: int) -> int:
    """+1 on the lower half of Z_n, -1 on the upper half."""
    if not 0 <= i < inst.n:
        raise InvariantError(f"point {i} outside Z_{inst.n}")
    return 1 if 2 * i < inst.n else -1


def step_signs(inst: RotationInstance) -> np.ndarray:
    idx = np.arange(inst.n)
    return np.where(2 * idx < inst.n, 1, -1).astype(np.int64)


def birkhoff_level(inst: RotationInstance, i: int, k: int) -> int:
    """1 plus the k-step running sum of step signs along the orbit of i.

    Satisfies level(i, 0) = 1 and
    level(i, k+1) = level(i, k) + sign(i + k * shift).
    """
    if k < 0:
        raise InvariantError("step count must be nonnegative")
    if not 0 <= i < inst.n:
        raise InvariantError(f"point {i} outside Z_{inst.n}")
    total = 1
    for j in range(k):
        total += step_sign(inst, (i + j * inst.shift) % inst.n)
    return total


def birkhoff_levels(inst: RotationInstance, k_max: int) -> np.ndarray:
    """Level table of shape (k_max + 1, n): row k holds level(i, k) for all i."""
    if k_max < 0:
        raise InvariantError("step count must be nonnegative")
    g = step_signs(inst)
    idx = np.arange(inst.n)
    out = np.empty((k_max + 1, inst.n), dtype=np.int64)
    out[0] = 1
    for k in range(k_max):
        out[k + 1] = out[k] + g[(idx + k * inst.shift) % inst.n]
    return out


def ap_cost(inst: RotationInstance) -> CostMatrix:
    """The two-permutation cost: 1 on the diagonal, 2 / 0 on the shift graph.

    The one-step graph costs 2 where the source sits in the lower half
    and 0 where it sits in the upper half; everything off the two graphs
    is forbidden.  Requires even n so the halves carry equal mass.
    """
    if inst.n % 2:
        raise InvariantError("the two-permutation cost needs an even grid")
    n, s = inst.n, inst.shift
    entries = np.full((n, n), math.inf)
    idx = np.arange(n)
    entries[idx, idx] = 1.0
    entries[idx, (idx + s) % n] = np.where(2 * idx < n, 2.0, 0.0)
    return CostMatrix(entries)


def level_matrix(inst: RotationInstance, k_max: int) -> np.ndarray:
    """Extended-real matrix carrying level(i, k) at cell (i, i + k*shift).

    Finite exactly on the union of the k-step shift graphs for
    0 <= k <= k_max; requires k_max < n so distinct k never collide on a
    cell (the shift is coprime, so i -> i + k*shift are distinct
    permutations for k = 0 .. n-1).
    """
    if not 0 <= k_max < inst.n:
        raise InvariantError(f"k_max must lie in [0, {inst.n - 1}]")
    n, s = inst.n, inst.shift
    levels = birkhoff_levels(inst, k_max)
    out = np.full((n, n), math.inf)
    idx = np.arange(n)
    for k in range(k_max + 1):
        cols = (idx + k * s) % n
        if np.any(np.isfinite(out[idx, cols])):
            raise InvariantError("shift graphs collided; k_max must stay below n")
        out[idx, cols] = levels[k]
    return out


def ex33_cost(inst: RotationInstance, k_max: int) -> CostMatrix:
    """Clamped level matrix: cost = max(level, 0) on the shift graphs.

    Cells whose level is <= 0 become free; off the graphs the cost is
    infinite.
    """
    lm = level_matrix(inst, k_max)
    fin = np.isfinite(lm)
    entries = np.where(fin, np.maximum(lm, 0.0), math.inf)
    return CostMatrix(entries)


def skew_step(inst: RotationInstance, state: OrbitState) -> OrbitState:
    """One step of the skew product: rotate, and move the level by the sign."""
    p = state.position % inst.n
    return OrbitState(position=(p + inst.shift) % inst.n,
                      level=state.level + step_sign(inst, p))


def first_passage(inst: RotationInstance, i: int, k_max: int) -> Optional[int]:
    """Smallest k in [1, k_max] whose level at i is <= 0, if any.

    Equivalently the first time the skew-product walk from (i, 0) dips to
    level -1 or below.
    """
    if k_max < 0:
        raise InvariantError("k_max must be nonnegative")
    if not 0 <= i < inst.n:
        raise InvariantError(f"point {i} outside Z_{inst.n}")
    levels = birkhoff_levels(inst, k_max)
    for k in range(1, k_max + 1):
        if levels[k, i] <= 0:
            return k
    return None


def shift_graph_plan(inst: RotationInstance, k: int) -> TransportPlan:
    """The uniform coupling supported on the k-step shift graph."""
    if not 0 <= k < inst.n:
        raise InvariantError(f"k must lie in [0, {inst.n - 1}]")
    n, s = inst.n, inst.shift
    mass = np.zeros((n, n))
    idx = np.arange(n)
    mass[idx, (idx + k * s) % n] = 1.0 / n
    return TransportPlan(mass, PlanKind.EXACT)


def _max_matching(adjacency: Sequence[Sequence[int]], n_right: int) -> list[int]:
    """Maximum bipartite matching by BFS augmenting paths.

    Returns match_left: for each left node the matched right node or -1.
    """
    n_left = len(adjacency)
    match_l = [-1] * n_left
    match_r = [-1] * n_right
    for s in range(n_left):
        if match_l[s] >= 0:
            continue
        parent_r: dict[int, int] = {}
        visited_l = {s}
        queue = [s]
        found = -1
        while queue and found < 0:
            u = queue.pop(0)
            for v in adjacency[u]:
                if v in parent_r:
                    continue
                parent_r[v] = u
                w = match_r[v]
                if w < 0:
                    found = v
                    break
                if w not in visited_l:
                    visited_l.add(w)
                    queue.append(w)
        if found >= 0:
            v = found
            while True:
                u = parent_r[v]
                prev = match_l[u]
                match_l[u] = v
                match_r[v] = u
                if u == s:
                    break
                v = prev
    return match_l


def zero_cost_plan(inst: RotationInstance, k_max: int) -> Optional[TransportPlan]:
    """Try to build an exact coupling supported on the free cells.

    Free cells are the k >= 1 shift-graph cells whose level is <= 0.
    Greedy pass first: sources in order of earliest passage each claim
    their first-passage target if it is still unmatched.  If the greedy
    pass stalls, a full maximum-matching pass runs on the whole free-cell
    graph.  Returns the uniform plan on a perfect matching, or None when
    no perfect matching exists (construction is sufficient, not
    necessary: the LP remains the ground truth for the optimal value).
    """
    if not 0 <= k_max < inst.n:
        raise InvariantError(f"k_max must lie in [0, {inst.n - 1}]")
    n, s = inst.n, inst.shift
    levels = birkhoff_levels(inst, k_max)
    adjacency: list[list[int]] = [[] for _ in range(n)]
    passage: list[Optional[int]] = [None] * n
    for i in range(n):
        for k in range(1, k_max + 1):
            if levels[k, i] <= 0:
                adjacency[i].append((i + k * s) % n)
                if passage[i] is None:
                    passage[i] = k
    if any(not adj for adj in adjacency):
        return None

    match = [-1] * n
    taken = [False] * n
    order = sorted(range(n), key=lambda i: (passage[i], i))  # type: ignore[arg-type]
    for i in order:
        k = passage[i]
        assert k is not None
        target = (i + k * s) % n
        if not taken[target]:
            match[i] = target
            taken[target] = True
    if any(t < 0 for t in match):
        match = _max_matching(adjacency, n)
        if any(t < 0 for t in match):
            return None
    mass = np.zeros((n, n))
    for i, j in enumerate(match):
        mass[i, j] = 1.0 / n
    return TransportPlan(mass, PlanKind.EXACT)


def mixture_weights(inst: RotationInstance, k_max: int, levels: np.ndarray,
                    potentials: Sequence[PotentialPair] = ()) -> np.ndarray:
    """Geometric weights for the mixture of shift-graph plans.

    weight[k] is proportional to 2**-k divided by the largest of 1, the
    mean absolute level on the k-step graph, and the largest potential
    L1 size among the sequence entries up to index k; the result is
    normalized to sum 1.  Before normalization both decay conditions
    weight[k] * mean|level_k| <= 2**-k and
    weight[k] * (|phi_m|_1 + |psi_m|_1) <= 2**-k for m <= k hold with
    constant 1 by construction.
    """
    if levels.shape[0] < k_max + 1 or levels.shape[1] != inst.n:
        raise InvariantError("level table does not cover 0..k_max")
    n = inst.n
    pot_norms = [float(np.mean(np.abs(p.phi)) + np.mean(np.abs(p.psi)))
                 for p in potentials]
    raw = np.empty(k_max + 1)
    for k in range(k_max + 1):
        level_norm = float(np.mean(np.abs(levels[k])))
        pot_norm = max(pot_norms[:k + 1], default=0.0)
        raw[k] = 2.0 ** (-k) / max(1.0, level_norm, pot_norm)
    return raw / raw.sum()


def graph_mixture_plan(inst: RotationInstance, k_max: int,
                       potentials: Sequence[PotentialPair] = ()) -> TransportPlan:
    """The weighted mixture of shift-graph plans for k = 0 .. k_max."""
    levels = birkhoff_levels(inst, k_max)
    weights = mixture_weights(inst, k_max, levels, potentials)
    plans = [shift_graph_plan(inst, k) for k in range(k_max + 1)]
    return mixture_plan(plans, weights)


def ap_coupling_space(inst: RotationInstance) -> tuple[int, int]:
    """Rank and affine dimension of the coupling system on the two graphs.

    Unknowns are the diagonal masses and the shift-graph masses; the
    constraints are the row and column sums of the uniform marginals.
    Rank 2n - 1 means the affine solution space is the one-dimensional
    segment between the two pure graph plans.
    """
    n, s = inst.n, inst.shift
    a = np.zeros((2 * n, 2 * n))
    idx = np.arange(n)
    a[idx, idx] = 1.0
    a[idx, n + idx] = 1.0
    a[n + idx, idx] = 1.0
    a[n + idx, n + (idx - s) % n] = 1.0
    rank = int(np.linalg.matrix_rank(a))
    return rank, 2 * n - rank
