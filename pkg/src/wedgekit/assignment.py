"""Linear assignment with forbidden pairs and a deterministic tie-break.

Minimum-cost perfect matching on a square cost matrix by the Hungarian
method in its shortest-augmenting-path form (one Dijkstra sweep per
row, dual potentials maintained throughout, cubic overall). Entries of
+inf mark forbidden pairs and saturate instead of entering arithmetic.
Among all optimal assignments the solver returns the one whose
row-to-column vector is lexicographically smallest; the tie-break runs
on the tight-edge subgraph certified by the final dual potentials, so
it never trades away optimality. Totals are summed in sorted order so
the reported cost is independent of row numbering; in particular
solve(C) and solve(C.T) report bitwise-equal totals whenever the
optimal edge-cost multiset is unique.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from numba import njit


class InfeasibleAssignment(Exception):
    """No perfect matching avoids the forbidden (infinite-cost) pairs."""


@dataclass(frozen=True)
class AssignmentResult:
    col_of_row: np.ndarray
    total: float


@njit(cache=True)
def _lapjv(cost):
    """Shortest-augmenting-path LAP. Returns (col_of, u, v, feasible)."""
    n = cost.shape[0]
    u = np.zeros(n, np.float64)
    v = np.zeros(n, np.float64)
    col_of = np.full(n, -1, np.int64)
    row_of = np.full(n, -1, np.int64)
    shortest = np.empty(n, np.float64)
    pred_row = np.empty(n, np.int64)
    done = np.empty(n, np.bool_)
    for start in range(n):
        for j in range(n):
            shortest[j] = np.inf
            pred_row[j] = -1
            done[j] = False
        sink = -1
        i = start
        delta = 0.0
        while True:
            # relax columns from the current row at distance delta
            for j in range(n):
                if not done[j]:
                    c = cost[i, j]
                    if c != np.inf:
                        r = delta + c - u[i] - v[j]
                        if r < shortest[j]:
                            shortest[j] = r
                            pred_row[j] = i
            best = np.inf
            bj = -1
            for j in range(n):
                if not done[j] and shortest[j] < best:
                    best = shortest[j]
                    bj = j
            if bj == -1:
                return col_of, u, v, False
            done[bj] = True
            delta = best
            if row_of[bj] == -1:
                sink = bj
                break
            i = row_of[bj]
        u[start] += delta
        for j in range(n):
            if done[j] and j != sink:
                u[row_of[j]] += delta - shortest[j]
                v[j] -= delta - shortest[j]
        j = sink
        while True:
            i = pred_row[j]
            row_of[j] = i
            nxt = col_of[i]
            col_of[i] = j
            j = nxt
            if i == start:
                break
    return col_of, u, v, True


@njit(cache=True)
def _canonicalize(cost, u, v, col_of, tau):
    """Rewire an optimal matching to the lexicographically smallest one.

    Complementary slackness: a perfect matching is optimal iff every
    edge is tight (reduced cost within tau of zero) under the final
    potentials. Rows are fixed in order to their smallest tight column
    for which the remaining rows still admit a perfect tight matching,
    checked with one augmenting-path search per candidate.
    """
    n = cost.shape[0]
    row_of = np.full(n, -1, np.int64)
    for i in range(n):
        row_of[col_of[i]] = i
    fixed = np.zeros(n, np.bool_)
    visited = np.empty(n, np.bool_)
    pred = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    for i in range(n):
        cur = col_of[i]
        for j in range(n):
            if j >= cur:
                break
            if fixed[j]:
                continue
            c = cost[i, j]
            if c == np.inf or c - u[i] - v[j] > tau:
                continue
            # tentatively move row i to column j; the displaced row must
            # rematch over tight edges avoiding fixed columns and j
            r_star = row_of[j]
            row_of[cur] = -1
            col_of[i] = j
            row_of[j] = i
            col_of[r_star] = -1
            for t in range(n):
                visited[t] = False
                pred[t] = -1
            visited[j] = True
            qh = 0
            qt = 0
            queue[qt] = r_star
            qt += 1
            found = -1
            while qh < qt and found == -1:
                r = queue[qh]
                qh += 1
                for j2 in range(n):
                    if visited[j2] or fixed[j2]:
                        continue
                    c2 = cost[r, j2]
                    if c2 == np.inf or c2 - u[r] - v[j2] > tau:
                        continue
                    visited[j2] = True
                    pred[j2] = r
                    if row_of[j2] == -1:
                        found = j2
                        break
                    queue[qt] = row_of[j2]
                    qt += 1
            if found != -1:
                j2 = found
                while True:
                    r = pred[j2]
                    nxt = col_of[r]
                    col_of[r] = j2
                    row_of[j2] = r
                    if r == r_star:
                        break
                    j2 = nxt
                cur = j
                break
            col_of[r_star] = j
            row_of[j] = r_star
            col_of[i] = cur
            row_of[cur] = i
        fixed[cur] = True
    return col_of


def _tight_tolerance(cost: np.ndarray) -> float:
    finite = cost[np.isfinite(cost)]
    scale = float(np.abs(finite).max()) if finite.size else 0.0
    return max(1e-9, 1e-12 * scale)


def solve(cost: np.ndarray, canonical: bool = True) -> AssignmentResult:
    """Minimum-cost assignment of rows to columns.

    Raises InfeasibleAssignment when every perfect matching crosses a
    forbidden (+inf) pair. With canonical=True the returned assignment
    is the lexicographically smallest optimal one.
    """
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"cost matrix must be square, got shape {cost.shape}")
    if np.isnan(cost).any() or np.isneginf(cost).any():
        raise ValueError("cost entries must be finite or +inf")
    n = cost.shape[0]
    if n == 0:
        return AssignmentResult(np.empty(0, dtype=np.int64), 0.0)
    col_of, u, v, feasible = _lapjv(cost)
    if not feasible:
        raise InfeasibleAssignment(
            f"no finite-cost perfect matching on {n}x{n} matrix"
        )
    if canonical:
        col_of = _canonicalize(cost, u, v, col_of, _tight_tolerance(cost))
    total = float(np.sort(cost[np.arange(n), col_of]).sum())
    return AssignmentResult(col_of, total)


def brute_force(cost: np.ndarray, max_size: int = 9) -> AssignmentResult:
    """Exhaustive assignment oracle for small matrices.

    Enumerates all n! permutations; ties on total cost are broken by
    the lexicographically smallest assignment vector, matching solve().
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"cost matrix must be square, got shape {cost.shape}")
    n = cost.shape[0]
    if n > max_size:
        raise ValueError(f"refusing to enumerate {n}! permutations")
    if n == 0:
        return AssignmentResult(np.empty(0, dtype=np.int64), 0.0)
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    totals = np.sort(cost[np.arange(n)[None, :], perms], axis=1).sum(axis=1)
    best = totals.min()
    if not np.isfinite(best):
        raise InfeasibleAssignment(
            f"no finite-cost perfect matching on {n}x{n} matrix"
        )
    ties = perms[totals == best]
    pick = ties[np.lexsort(ties[:, ::-1].T)[0]]
    return AssignmentResult(pick, float(best))
