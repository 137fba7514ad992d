"""Dense two-phase primal simplex on the full tableau.

General-purpose engine for the programs that do not have pure
transportation structure (the relaxed dual) and an independent
cross-check for the network engine on the ones that do.  Variables are
nonnegative; rows carry "le", "ge" or "eq" sense.  Pricing is Dantzig
with a Bland fallback after a run of degenerate pivots; row duals are
recovered from the initial identity columns, so the caller gets exact
LP multipliers without a separate factorization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    InfeasibleError,
    IterationLimitError,
    MKLabError,
    ShapeError,
    UnboundedError,
)

_PIVOT_TOL = 1e-11
_RATIO_TIE_TOL = 1e-12
_DEGENERATE_TOL = 1e-12

#: Bland's rule engages after this many consecutive degenerate pivots
#: per tableau dimension (rows + columns).
BLAND_AFTER_DEGENERATE = 10

SENSES = ("le", "ge", "eq")


@dataclass(frozen=True)
class DenseResult:
    x: np.ndarray
    value: float
    duals: np.ndarray
    iterations: int
    pivots: int


def solve_dense(objective, lhs, senses, rhs, *,
                feasibility_tol: float = 1e-9,
                optimality_tol: float = 1e-9,
                max_iterations: int = 10 ** 6) -> DenseResult:
    """Minimize objective @ x subject to lhs x (senses) rhs, x >= 0.

    Returns the optimizer, the optimal value, and one dual multiplier per
    row in the original row orientation (for a minimum problem the duals
    satisfy objective - lhs.T @ y >= -optimality_tol componentwise).
    """
    c = np.asarray(objective, dtype=float).copy()
    a = np.asarray(lhs, dtype=float).copy()
    b = np.asarray(rhs, dtype=float).copy()
    if a.ndim != 2:
        raise ShapeError("constraint matrix must be 2-d")
    n_rows, n_vars = a.shape
    if c.shape != (n_vars,) or b.shape != (n_rows,):
        raise ShapeError("objective/rhs lengths do not match the constraint matrix")
    sense = list(senses)
    if len(sense) != n_rows or any(s not in SENSES for s in sense):
        raise ShapeError("one sense per row, each in {'le','ge','eq'}")

    # Canonicalize to b >= 0; a flipped inequality swaps its sense.
    flip = b < 0
    a[flip] *= -1.0
    b[flip] *= -1.0
    for i in np.flatnonzero(flip):
        if sense[i] == "le":
            sense[i] = "ge"
        elif sense[i] == "ge":
            sense[i] = "le"

    n_slack = sum(s != "eq" for s in sense)
    n_art = sum(s != "le" for s in sense)
    n_cols = n_vars + n_slack + n_art

    tab = np.zeros((n_rows, n_cols + 1))
    tab[:, :n_vars] = a
    tab[:, n_cols] = b
    basis = np.empty(n_rows, dtype=int)
    id_col = np.empty(n_rows, dtype=int)  # column holding +e_i / -e_i for duals
    is_art = np.zeros(n_cols, dtype=bool)

    col = n_vars
    art_col = n_vars + n_slack
    for i, s in enumerate(sense):
        if s == "le":
            tab[i, col] = 1.0
            basis[i] = col
            id_col[i] = col
            col += 1
        elif s == "ge":
            tab[i, col] = -1.0
            col += 1
            tab[i, art_col] = 1.0
            is_art[art_col] = True
            basis[i] = art_col
            id_col[i] = art_col
            art_col += 1
        else:
            tab[i, art_col] = 1.0
            is_art[art_col] = True
            basis[i] = art_col
            id_col[i] = art_col
            art_col += 1

    cost2 = np.zeros(n_cols + 1)
    cost2[:n_vars] = c
    cost1 = np.zeros(n_cols + 1)
    cost1[:n_cols][is_art] = 1.0

    # Reduced-cost rows, canonicalized against the starting basis.
    z2 = cost2.copy()
    z1 = cost1.copy()
    for i in range(n_rows):
        if cost1[basis[i]] != 0.0:
            z1 -= cost1[basis[i]] * tab[i]
        if cost2[basis[i]] != 0.0:
            z2 -= cost2[basis[i]] * tab[i]

    basic_mask = np.zeros(n_cols, dtype=bool)
    basic_mask[basis] = True

    iterations = 0
    pivots = 0
    degenerate_run = 0
    bland = False
    bland_threshold = BLAND_AFTER_DEGENERATE * (n_rows + n_cols)

    def do_pivot(row: int, column: int) -> None:
        nonlocal pivots
        piv = tab[row, column]
        tab[row] /= piv
        factors = tab[:, column].copy()
        factors[row] = 0.0
        tab[:] -= np.outer(factors, tab[row])
        z1[:] -= z1[column] * tab[row]
        z2[:] -= z2[column] * tab[row]
        basic_mask[basis[row]] = False
        basic_mask[column] = True
        basis[row] = column
        pivots += 1

    def run_phase(z: np.ndarray, allowed: np.ndarray) -> None:
        nonlocal iterations, degenerate_run, bland
        while True:
            if iterations >= max_iterations:
                raise IterationLimitError(f"simplex exceeded {max_iterations} iterations")
            iterations += 1
            reduced = np.where(allowed & ~basic_mask, z[:n_cols], np.inf)
            if bland:
                cands = np.flatnonzero(reduced < -optimality_tol)
                if cands.size == 0:
                    return
                entering = int(cands[0])
            else:
                entering = int(np.argmin(reduced))
                if reduced[entering] >= -optimality_tol:
                    return
            column = tab[:, entering]
            pos = column > _PIVOT_TOL
            if not pos.any():
                raise UnboundedError("no blocking row for the entering column")
            ratios = np.where(pos, tab[:, n_cols] / np.where(pos, column, 1.0), np.inf)
            rmin = float(ratios.min())
            ties = np.flatnonzero(ratios <= rmin + _RATIO_TIE_TOL * (1.0 + rmin))
            leaving = int(ties[np.argmin(basis[ties])])
            do_pivot(leaving, entering)
            if rmin <= _DEGENERATE_TOL:
                degenerate_run += 1
                if degenerate_run > bland_threshold:
                    bland = True
            else:
                degenerate_run = 0
                bland = False

    allowed = ~is_art
    if is_art.any():
        run_phase(z1, allowed)
        infeas = float(np.sum(tab[is_art[basis], n_cols]))
        if infeas > feasibility_tol:
            raise InfeasibleError(f"phase-1 residual {infeas:.3e} exceeds {feasibility_tol:.1e}")
        # Drive basic artificials out; rows with no eligible column are
        # redundant and keep a zero-valued artificial harmlessly.
        for i in range(n_rows):
            if is_art[basis[i]]:
                row = tab[i, :n_cols]
                eligible = np.flatnonzero((np.abs(row) > _PIVOT_TOL) & ~is_art & ~basic_mask)
                if eligible.size:
                    do_pivot(i, int(eligible[0]))

    try:
        run_phase(z2, allowed)
    except UnboundedError:
        raise UnboundedError("objective unbounded below on the feasible set") from None

    if float(np.min(tab[:, n_cols])) < -1e-7:
        raise MKLabError("simplex left the feasible region")  # pragma: no cover

    x_full = np.zeros(n_cols)
    x_full[basis] = tab[:, n_cols]
    x = x_full[:n_vars]
    value = float(np.dot(c, x))

    # Dual of row i from the reduced cost of its initial identity column:
    # for a +e_i column with zero phase-2 cost, z2 = -y_i; the surplus
    # column of a "ge" row is -e_i, but those rows carry an artificial
    # which is used instead, so the +e_i formula applies throughout.
    y = -z2[id_col]
    y[flip] *= -1.0
    return DenseResult(x=x, value=value, duals=y, iterations=iterations, pivots=pivots)
