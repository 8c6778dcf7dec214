"""Square minimum-cost assignment (Hungarian / linear sum assignment).

The solver runs the shortest-augmenting-path method with dual potentials in
O(n^3), then canonicalises ties: among all minimum-cost assignments it
returns the lexicographically smallest mapping vector. Attack cost matrices
repeat columns for every person sharing a cell, so optimal ties are the
common case, and a fixed tie rule is what makes whole runs reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


class AssignmentError(ValueError):
    """Malformed cost matrix or unsupported problem size."""


@dataclass(frozen=True)
class Assignment:
    mapping: tuple[int, ...]  # row -> column, a permutation of [0, n)
    total_cost: float


def _validated(costs) -> np.ndarray:
    arr = np.asarray(costs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise AssignmentError(f"cost matrix must be square, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise AssignmentError("cost matrix must have at least one row")
    if not np.isfinite(arr).all():
        raise AssignmentError("cost matrix entries must be finite")
    if (arr < 0).any():
        raise AssignmentError("cost matrix entries must be non-negative")
    return arr


def _shortest_path_matching(cost: np.ndarray):
    """O(n^3) augmenting-path assignment with potentials.

    Returns (u, v, col_of_row, row_of_col) satisfying complementary
    slackness: matched edges have zero reduced cost, all edges non-negative.
    """
    n = cost.shape[0]
    u = np.zeros(n)
    v = np.zeros(n)
    row_of_col = np.full(n, -1, dtype=np.int64)
    for start_row in range(n):
        minv = np.full(n, np.inf)
        way = np.full(n, -1, dtype=np.int64)  # predecessor column in the tree (-1 = root)
        used = np.zeros(n, dtype=bool)
        i0 = start_row
        j0 = -1
        while True:
            cur = cost[i0] - u[i0] - v
            free = ~used
            improved = free & (cur < minv)
            minv[improved] = cur[improved]
            way[improved] = j0
            masked = np.where(free, minv, np.inf)
            j1 = int(np.argmin(masked))  # ties resolve to the smallest column
            delta = masked[j1]
            u[start_row] += delta
            if used.any():
                u[row_of_col[used]] += delta
                v[used] -= delta
            minv[free] -= delta
            used[j1] = True
            j0 = j1
            if row_of_col[j1] == -1:
                break
            i0 = row_of_col[j1]
        while j0 != -1:
            jprev = way[j0]
            row_of_col[j0] = start_row if jprev == -1 else row_of_col[jprev]
            j0 = jprev
    col_of_row = np.empty(n, dtype=np.int64)
    col_of_row[row_of_col] = np.arange(n)
    return u, v, col_of_row, row_of_col


def _alternating_path(tight, row_of_col, col_of_row, start_row, target_col, banned_col, fixed_cols):
    """Re-matching path from ``start_row`` to the freed ``target_col``.

    Walks non-matching tight edges row->column and matching edges
    column->row. Returns [(row, new_col), ...] to flip, or None.
    """
    n = tight.shape[0]
    avail = ~fixed_cols
    avail[banned_col] = False
    pred_row = np.full(n, -1, dtype=np.int64)
    frontier = [start_row]
    while frontier:
        next_frontier = []
        for r in frontier:
            cand = np.flatnonzero(tight[r] & avail)
            if cand.size == 0:
                continue
            avail[cand] = False
            pred_row[cand] = r
            if pred_row[target_col] != -1:
                pairs = []
                c = target_col
                while True:
                    r2 = int(pred_row[c])
                    pairs.append((r2, c))
                    if r2 == start_row:
                        return pairs
                    c = int(col_of_row[r2])
            next_frontier.extend(int(row_of_col[c]) for c in cand)
        frontier = next_frontier
    return None


def _lex_min_refine(cost, u, v, col_of_row, row_of_col):
    """Rewire the matching to the lexicographically smallest optimal mapping.

    Only zero-reduced-cost ("tight") edges w.r.t. the optimal duals can
    appear in an optimal assignment, so any perfect matching on the tight
    graph is optimal and vice versa. Rows are fixed in order, each taking the
    smallest tight column that still leaves the remaining rows matchable.
    """
    n = cost.shape[0]
    tol = 1e-9 * (1.0 + float(np.abs(cost).max()))
    slack = cost - u[:, None] - v[None, :]
    tight = slack <= tol
    rows = np.arange(n)
    tight[rows, col_of_row] = True  # matched edges are tight by construction
    col_of_row = col_of_row.copy()
    row_of_col = row_of_col.copy()
    fixed_cols = np.zeros(n, dtype=bool)
    for i in range(n):
        current = int(col_of_row[i])
        for j in np.flatnonzero(tight[i]):
            j = int(j)
            if j >= current:
                break
            if fixed_cols[j]:
                continue
            r0 = int(row_of_col[j])
            pairs = _alternating_path(tight, row_of_col, col_of_row, r0, current, j, fixed_cols)
            if pairs is not None:
                for r2, c2 in pairs:
                    col_of_row[r2] = c2
                    row_of_col[c2] = r2
                col_of_row[i] = j
                row_of_col[j] = i
                current = j
                break
        fixed_cols[current] = True
    return col_of_row


def solve_min(costs) -> Assignment:
    """Globally minimal assignment; ties break to the lexicographically
    smallest mapping vector."""
    cost = _validated(costs)
    n = cost.shape[0]
    u, v, col_of_row, row_of_col = _shortest_path_matching(cost)
    mapping = _lex_min_refine(cost, u, v, col_of_row, row_of_col)
    total = float(cost[np.arange(n), mapping].sum())
    return Assignment(tuple(int(j) for j in mapping), total)


def solve_min_brute(costs) -> Assignment:
    """Exhaustive-search oracle, same tie rule as solve_min. n <= 10 only."""
    cost = _validated(costs)
    n = cost.shape[0]
    if n > 10:
        raise AssignmentError(f"brute force limited to n <= 10, got {n}")
    rows = [tuple(row) for row in cost]
    best_total = np.inf
    best_perm = None
    for perm in itertools.permutations(range(n)):
        total = 0.0
        for i, j in enumerate(perm):
            total += rows[i][j]
        if total < best_total:  # strict: first (lex-smallest) optimum wins
            best_total = total
            best_perm = perm
    return Assignment(best_perm, float(best_total))
