"""Optimal and ranked assignment.

``ranked_assignment`` enumerates association maps for the GLMB update with
Murty's partitioning over the shortest-augmenting-path solver in ``kernels``.
``k_best_subsets`` does the same job for the prediction step, where each label
independently survives or dies and each birth is independently on or off.
"""
import heapq
import math

import numpy as np

from . import kernels


def _solve(cost):
    """``(col4row, total)`` for a rows<=cols matrix, or ``None`` if infeasible."""
    col = kernels.lsap(np.ascontiguousarray(cost, dtype=float))
    if len(col) and col[0] < 0:
        return None
    total = float(cost[np.arange(len(col)), col].sum())
    if not math.isfinite(total):
        return None
    return col, total


def optimal_assignment(cost):
    """Minimum-cost injective assignment.

    Returns ``(rows, cols, total)``; every row is assigned when the matrix is
    tall-or-square transposed, i.e. ``min(m, n)`` pairs come back.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise ValueError("cost must be a 2-D matrix")
    m, n = cost.shape
    if m == 0 or n == 0:
        return np.zeros(0, int), np.zeros(0, int), 0.0
    transposed = m > n
    C = cost.T if transposed else cost
    sol = _solve(C)
    if sol is None:
        raise ValueError("no finite-cost assignment exists")
    col, total = sol
    rows = np.arange(len(col))
    if transposed:
        rows, col = col, rows
        order = np.argsort(rows)
        rows, col = rows[order], col[order]
    return rows, col, total


def ranked_assignment_log(log_scores, K):
    """K best association maps from a ``(n, m+1)`` log-score matrix.

    Column 0 is the missed-detection score. Returns ``(thetas, log_weights)``
    with ``thetas`` an ``(k, n)`` int array (0 = miss, j = measurement j).
    """
    if K <= 0:
        raise ValueError("K must be positive")
    log_scores = np.asarray(log_scores, dtype=float)
    n, m1 = log_scores.shape
    m = m1 - 1
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64), np.zeros(1)
    C = np.full((n, m + n), np.inf)
    C[:, :m] = -log_scores[:, 1:]
    C[np.arange(n), m + np.arange(n)] = -log_scores[:, 0]
    C[np.isnan(C)] = np.inf

    first = _solve(C)
    if first is None:
        return np.zeros((0, n), dtype=np.int64), np.zeros(0)
    counter = 0
    heap = [(first[1], counter, first[0], C)]
    sols, costs = [], []
    while heap and len(sols) < K:
        total, _, col, Cm = heapq.heappop(heap)
        sols.append(col)
        costs.append(total)
        if len(sols) == K:
            break
        work = Cm.copy()
        for t in range(n):
            sub = work.copy()
            sub[t, col[t]] = np.inf
            res = _solve(sub)
            if res is not None:
                counter += 1
                heapq.heappush(heap, (res[1], counter, res[0], sub))
            keep = work[t, col[t]]
            work[t, :] = np.inf
            work[:, col[t]] = np.inf
            work[t, col[t]] = keep
    cols = np.array(sols, dtype=np.int64)
    thetas = np.where(cols < m, cols + 1, 0)
    return thetas, -np.array(costs)


def ranked_assignment(scores, K):
    """K best maps for a nonnegative ``(n, m+1)`` score matrix, best first.

    Returns a list of ``(theta, weight)`` with ``weight = prod scores[i, theta[i]]``.
    """
    scores = np.asarray(scores, dtype=float)
    if np.any(scores < 0) or not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite and nonnegative")
    with np.errstate(divide="ignore"):
        thetas, logw = ranked_assignment_log(np.log(scores), K)
    return [(th, float(np.exp(lw))) for th, lw in zip(thetas, logw)]


def k_best_subsets(log_in, log_out, K):
    """K most probable joint on/off choices over independent binary items.

    Item ``i`` contributes ``log_in[i]`` when selected and ``log_out[i]`` when
    not. Returns ``(masks, log_weights)`` sorted best first; ``masks`` is a
    ``(k, n)`` bool array.
    """
    if K <= 0:
        raise ValueError("K must be positive")
    log_in = np.asarray(log_in, dtype=float)
    log_out = np.asarray(log_out, dtype=float)
    n = len(log_in)
    if np.any(np.isneginf(log_in) & np.isneginf(log_out)):
        return np.zeros((0, n), dtype=bool), np.zeros(0)
    base = log_in > log_out
    best = float(np.where(base, log_in, log_out).sum())
    penalty = np.abs(log_in - log_out)
    flippable = np.flatnonzero(np.isfinite(penalty))
    order = flippable[np.argsort(penalty[flippable], kind="stable")]
    d = penalty[order]

    masks = [base.copy()]
    logw = [best]
    # enumerate subsets of `order` by increasing total penalty; each subset is
    # generated exactly once from its largest index
    heap = [(d[0], (0,))] if len(d) else []
    while heap and len(masks) < K:
        s, idx = heapq.heappop(heap)
        mask = base.copy()
        mask[order[list(idx)]] ^= True
        masks.append(mask)
        logw.append(best - s)
        j = idx[-1]
        if j + 1 < len(d):
            heapq.heappush(heap, (s + d[j + 1], idx + (j + 1,)))
            heapq.heappush(heap, (s - d[j] + d[j + 1], idx[:-1] + (j + 1,)))
    return np.array(masks, dtype=bool).reshape(len(masks), n), np.array(logw)
