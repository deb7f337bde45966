"""Hot numeric kernels, each with a compiled loop and a numpy twin.

The public names at the bottom are bound to the numba version unless the
``BOOSTED_GLMB_NO_NUMBA`` switch is set (see ``_accel``). Both versions are
exported with ``_nb`` / ``_np`` suffixes so tests and benchmarks can compare
them directly.
"""
import math

import numpy as np

from ._accel import HAVE_NUMBA, njit, select

OMEGA_EPS = 1e-10
LOG_2PI = math.log(2.0 * math.pi)


# --------------------------------------------------------------------------
# coordinated-turn propagation of particle batches
# --------------------------------------------------------------------------

@njit
def _ct_one(px, vx, py, vy, om, T, wx, wy, dw):
    s = math.sin(om * T)
    c = math.cos(om * T)
    if abs(om) < OMEGA_EPS:
        a = T
        b = 0.0
    else:
        a = s / om
        b = 2.0 * math.sin(0.5 * om * T) ** 2 / om  # (1 - cos)/om without cancellation
    h = 0.5 * T * T
    return (px + a * vx - b * vy + h * wx, c * vx - s * vy + T * wx,
            py + b * vx + a * vy + h * wy, s * vx + c * vy + T * wy, om + dw)


@njit
def _ct_step_nb(X, T, noise):
    out = np.empty_like(X)
    for k in range(X.shape[0]):
        q = _ct_one(X[k, 0], X[k, 1], X[k, 2], X[k, 3], X[k, 4], T,
                    noise[k, 0], noise[k, 1], noise[k, 2])
        for d in range(5):
            out[k, d] = q[d]
    return out


def _ct_step_np(X, T, noise):
    px, vx, py, vy, om = X.T
    s = np.sin(om * T)
    c = np.cos(om * T)
    small = np.abs(om) < OMEGA_EPS
    safe = np.where(small, 1.0, om)
    a = np.where(small, T, s / safe)
    b = np.where(small, 0.0, 2.0 * np.sin(0.5 * om * T) ** 2 / safe)
    h = 0.5 * T * T
    wx, wy, dw = noise.T
    return np.column_stack([
        px + a * vx - b * vy + h * wx,
        c * vx - s * vy + T * wx,
        py + b * vx + a * vy + h * wy,
        s * vx + c * vy + T * wy,
        om + dw,
    ])


# --------------------------------------------------------------------------
# batch log-likelihoods, particles x measurements
# --------------------------------------------------------------------------

@njit
def _wrap(a):
    # (-pi, pi]
    if -math.pi < a <= math.pi:
        return a
    a += math.pi
    a -= 2.0 * math.pi * math.floor(a / (2.0 * math.pi))
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


@njit
def _bearing_range_loglik_nb(X, Z, ox, oy, sig_th, sig_r):
    P = X.shape[0]
    m = Z.shape[0]
    out = np.empty((P, m))
    norm = -math.log(2.0 * math.pi * sig_th * sig_r)
    for k in range(P):
        dx = X[k, 0] - ox
        dy = X[k, 2] - oy
        th = math.atan2(dx, dy)
        rr = math.sqrt(dx * dx + dy * dy)
        for j in range(m):
            e1 = _wrap(Z[j, 0] - th) / sig_th
            e2 = (Z[j, 1] - rr) / sig_r
            out[k, j] = norm - 0.5 * (e1 * e1 + e2 * e2)
    return out


def wrap_angle(a):
    """Wrap angles to (-pi, pi]."""
    a = np.mod(np.asarray(a, dtype=float) + np.pi, 2.0 * np.pi)
    a = np.where(a <= 0.0, a + 2.0 * np.pi, a)
    return a - np.pi


def _bearing_range_loglik_np(X, Z, ox, oy, sig_th, sig_r):
    dx = X[:, 0] - ox
    dy = X[:, 2] - oy
    th = np.arctan2(dx, dy)
    rr = np.hypot(dx, dy)
    e1 = wrap_angle(Z[None, :, 0] - th[:, None]) / sig_th
    e2 = (Z[None, :, 1] - rr[:, None]) / sig_r
    return -math.log(2.0 * math.pi * sig_th * sig_r) - 0.5 * (e1 * e1 + e2 * e2)


@njit
def _position_loglik_nb(X, Z, ix, iy, Sinv, logdet):
    P = X.shape[0]
    m = Z.shape[0]
    out = np.empty((P, m))
    norm = -LOG_2PI - 0.5 * logdet
    a = Sinv[0, 0]
    b = Sinv[0, 1] + Sinv[1, 0]
    d = Sinv[1, 1]
    for k in range(P):
        x = X[k, ix]
        y = X[k, iy]
        for j in range(m):
            e1 = Z[j, 0] - x
            e2 = Z[j, 1] - y
            out[k, j] = norm - 0.5 * (a * e1 * e1 + b * e1 * e2 + d * e2 * e2)
    return out


def _position_loglik_np(X, Z, ix, iy, Sinv, logdet):
    E = Z[None, :, :] - np.stack([X[:, ix], X[:, iy]], axis=1)[:, None, :]
    q = np.einsum("pmi,ij,pmj->pm", E, Sinv, E)
    return -LOG_2PI - 0.5 * logdet - 0.5 * q


# exp below this underflows into subnormals, which are slow and carry no mass
EXP_FLOOR = -708.0


@njit
def _scaled_exp_nb(L, scale):
    out = np.empty_like(L)
    for k in range(L.shape[0]):
        for j in range(L.shape[1]):
            v = L[k, j]
            out[k, j] = scale * math.exp(v) if v > EXP_FLOOR else 0.0
    return out


def _scaled_exp_np(L, scale):
    return np.where(L > EXP_FLOOR, scale * np.exp(np.maximum(L, EXP_FLOOR)), 0.0)


# --------------------------------------------------------------------------
# systematic resampling
# --------------------------------------------------------------------------

@njit
def _systematic_nb(w, u0, n):
    total = 0.0
    for i in range(w.shape[0]):
        total += w[i]
    idx = np.empty(n, dtype=np.int64)
    step = total / n
    pos = u0 * step
    acc = w[0]
    i = 0
    last = w.shape[0] - 1
    for k in range(n):
        while acc < pos and i < last:
            i += 1
            acc += w[i]
        idx[k] = i
        pos += step
    return idx


def _systematic_np(w, u0, n):
    c = np.cumsum(w)
    pos = (u0 + np.arange(n)) * (c[-1] / n)
    idx = np.searchsorted(c, pos, side="left")
    return np.minimum(idx, w.shape[0] - 1).astype(np.int64)


@njit
def _resample_columns_nb(base, G, u0s, n):
    P, m = G.shape
    out = np.empty((m, n), dtype=np.int64)
    w = np.empty(P)
    for j in range(m):
        for k in range(P):
            w[k] = base[k] * G[k, j]
        out[j] = _systematic_nb(w, u0s[j], n)
    return out


def _resample_columns_np(base, G, u0s, n):
    W = base[:, None] * G
    out = np.empty((G.shape[1], n), dtype=np.int64)
    for j in range(G.shape[1]):
        out[j] = _systematic_np(W[:, j], u0s[j], n)
    return out



@njit
def _segment_systematic_nb(w, offsets, keep, u0s, n):
    out = np.empty(keep.shape[0] * n, dtype=np.int64)
    for q in range(keep.shape[0]):
        a = offsets[keep[q]]
        idx = _systematic_nb(w[a:offsets[keep[q] + 1]], u0s[q], n)
        for t in range(n):
            out[q * n + t] = a + idx[t]
    return out


def _segment_systematic_np(w, offsets, keep, u0s, n):
    out = np.empty(len(keep) * n, dtype=np.int64)
    for q, i in enumerate(keep):
        a, b = offsets[i], offsets[i + 1]
        out[q * n:(q + 1) * n] = a + _systematic_np(w[a:b], u0s[q], n)
    return out


# --------------------------------------------------------------------------
# RMB measurement step: detection mass, legacy weights and resampled p_U(z)
# --------------------------------------------------------------------------
# Gt holds p_D1 * g(z|x) for the target particles in particle order; clutter
# particles use the constant c0 = p_D0 / area. r must already be < 1.

@njit
def _first_at_least(c, lo, hi, t):
    # first index in [lo, hi) with c[i] >= t, else hi - 1
    h = hi
    while lo < h:
        mid = (lo + h) // 2
        if c[mid] < t:
            lo = mid + 1
        else:
            h = mid
    return lo if lo < hi else hi - 1


@njit
def _rmb_measurement_nb(offsets, w, u, Gt, pd0, pd1, c0, r, n, u0s):
    P = w.shape[0]
    M = r.shape[0]
    m = Gt.shape[1]
    rho = np.zeros(M)
    w_leg = np.empty(P)
    A = np.zeros((M, m))
    trow = np.empty(P, dtype=np.int64)
    ratio = np.empty(M)
    # runs of equal class inside a component; cwr is the within-run cumulative w
    run_a = np.empty(P, dtype=np.int64)
    run_b = np.empty(P, dtype=np.int64)
    run_c = np.empty(P, dtype=np.int64)
    run_w = np.empty(P)
    cwr = np.empty(P)
    nr = 0
    t = 0
    for i in range(M):
        a, b = offsets[i], offsets[i + 1]
        ratio[i] = r[i] / (1.0 - r[i])
        w0 = 0.0
        miss = 0.0
        for k in range(a, b):
            if k == a or u[k] != u[k - 1]:
                if nr > 0 and run_b[nr - 1] == -1:
                    run_b[nr - 1] = k
                run_a[nr] = k
                run_b[nr] = -1
                run_c[nr] = i
                run_w[nr] = 0.0
                nr += 1
            run_w[nr - 1] += w[k]
            cwr[k] = run_w[nr - 1]
            if u[k] == 1:
                trow[k] = t
                rho[i] += w[k] * pd1
                w_leg[k] = w[k] * (1.0 - pd1)
                for j in range(m):
                    A[i, j] += w[k] * Gt[t, j]
                t += 1
            else:
                trow[k] = -1
                rho[i] += w[k] * pd0
                w_leg[k] = w[k] * (1.0 - pd0)
                w0 += w[k]
            miss += w_leg[k]
        if nr > 0 and run_b[nr - 1] == -1:
            run_b[nr - 1] = b
        for j in range(m):
            A[i, j] += w0 * c0
        for k in range(a, b):
            w_leg[k] = w_leg[k] / miss if miss > 0.0 else 1.0 / (b - a)

    picks = np.empty((m, n), dtype=np.int64)
    mass = np.empty(nr)
    cg = np.empty(P)
    for j in range(m):
        # run masses with the measurement likelihood, else the base weights
        total = 0.0
        for q in range(nr):
            a, b = run_a[q], run_b[q]
            if u[a] == 1:
                acc = 0.0
                for k in range(a, b):
                    acc += w[k] * Gt[trow[k], j]
                    cg[k] = acc
                mass[q] = ratio[run_c[q]] * acc
            else:
                mass[q] = ratio[run_c[q]] * c0 * run_w[q]
            total += mass[q]
        use_g = total > 0.0
        if not use_g:
            total = 0.0
            for q in range(nr):
                mass[q] = ratio[run_c[q]] * run_w[q]
                total += mass[q]
        if not total > 0.0:
            step = P / n
            for s in range(n):
                idx = int(math.ceil((u0s[j] + s) * step)) - 1
                picks[j, s] = min(max(idx, 0), P - 1)
            continue
        step = total / n
        q = 0
        before = 0.0
        for s in range(n):
            pos = (u0s[j] + s) * step
            while q < nr - 1 and before + mass[q] < pos:
                before += mass[q]
                q += 1
            a, b = run_a[q], run_b[q]
            if mass[q] > 0.0:
                if use_g and u[a] == 1:
                    picks[j, s] = _first_at_least(cg, a, b, (pos - before) / ratio[run_c[q]])
                else:
                    scale = ratio[run_c[q]] * (c0 if use_g else 1.0)
                    picks[j, s] = _first_at_least(cwr, a, b, (pos - before) / scale)
            else:
                picks[j, s] = b - 1
    return rho, w_leg, A, picks


def _rmb_measurement_np(offsets, w, u, Gt, pd0, pd1, c0, r, n, u0s):
    P = len(w)
    M = len(r)
    m = Gt.shape[1]
    sizes = np.diff(offsets)
    comp = np.repeat(np.arange(M), sizes)
    tgt = u == 1
    pd = np.where(tgt, pd1, pd0)
    rho = np.bincount(comp, weights=w * pd, minlength=M)
    wl = w * (1.0 - pd)
    miss = np.bincount(comp, weights=wl, minlength=M)[comp]
    w_leg = np.where(miss > 0, wl / np.where(miss > 0, miss, 1.0), 1.0 / sizes[comp])
    G = np.full((P, m), c0)
    G[tgt] = Gt
    A = np.zeros((M, m))
    np.add.at(A, comp, w[:, None] * G)
    base = w * (r / (1.0 - r))[comp]
    W = base[:, None] * G
    dead = ~(W.sum(axis=0) > 0)
    W[:, dead] = base[:, None] if base.sum() > 0 else 1.0
    picks = np.empty((m, n), dtype=np.int64)
    for j in range(m):
        picks[j] = _systematic_np(W[:, j], u0s[j], n)
    return rho, w_leg, A, picks


# --------------------------------------------------------------------------
# RMB prediction for CT targets and random-walk clutter generators
# --------------------------------------------------------------------------
# noise is a flat standard-normal stream: three draws per target particle
# (wx, wy, d_omega) and two per clutter particle (dx, dy), in particle order.
# Propagated states and weights go to the first P rows of xo and wo.

@njit
def _rmb_predict_ct_rw_nb(x, u, w, offsets, ps0, ps1, T, sw, som, srw, noise, xo, wo):
    M = offsets.shape[0] - 1
    P = x.shape[0]
    surv = np.zeros(M)
    for i in range(M):
        tot = 0.0
        for k in range(offsets[i], offsets[i + 1]):
            wo[k] = w[k] * (ps1 if u[k] == 1 else ps0)
            tot += wo[k]
        surv[i] = tot
        n = offsets[i + 1] - offsets[i]
        for k in range(offsets[i], offsets[i + 1]):
            wo[k] = wo[k] / tot if tot > 0.0 else 1.0 / n
    cur = 0
    for k in range(P):
        if u[k] == 1:
            q = _ct_one(x[k, 0], x[k, 1], x[k, 2], x[k, 3], x[k, 4], T,
                        sw * noise[cur], sw * noise[cur + 1], som * noise[cur + 2])
            for d in range(5):
                xo[k, d] = q[d]
            cur += 3
        else:
            for d in range(x.shape[1]):
                xo[k, d] = x[k, d]
            xo[k, 0] += srw * noise[cur]
            xo[k, 2] += srw * noise[cur + 1]
            cur += 2
    return surv


def _rmb_predict_ct_rw_np(x, u, w, offsets, ps0, ps1, T, sw, som, srw, noise, xo, wo):
    tgt = u == 1
    ps = np.where(tgt, ps1, ps0) * w
    surv = np.add.reduceat(ps, offsets[:-1]) if len(w) else np.zeros(0)
    sizes = np.diff(offsets)
    comp = np.repeat(np.arange(len(sizes)), sizes)
    tot = surv[comp]
    P = len(w)
    wo[:P] = np.where(tot > 0, ps / np.where(tot > 0, tot, 1.0), 1.0 / sizes[comp])
    start = np.concatenate([[0], np.cumsum(np.where(tgt, 3, 2))[:-1]]).astype(np.int64)
    y = x.copy()
    st = start[tgt]
    nz = np.column_stack([sw * noise[st], sw * noise[st + 1], som * noise[st + 2]])
    y[tgt] = _ct_step_np(x[tgt], T, nz)
    sc = start[~tgt]
    y[~tgt, 0] += srw * noise[sc]
    y[~tgt, 2] += srw * noise[sc + 1]
    xo[:P] = y
    return surv


# --------------------------------------------------------------------------
# rectangular linear sum assignment (shortest augmenting path, rows <= cols)
# --------------------------------------------------------------------------

@njit
def _lsap_nb(cost):
    nr, nc = cost.shape
    u = np.zeros(nr)
    v = np.zeros(nc)
    shortest = np.empty(nc)
    path = np.full(nc, -1, dtype=np.int64)
    col4row = np.full(nr, -1, dtype=np.int64)
    row4col = np.full(nc, -1, dtype=np.int64)
    SR = np.zeros(nr, dtype=np.bool_)
    SC = np.zeros(nc, dtype=np.bool_)
    remaining = np.empty(nc, dtype=np.int64)
    for cur in range(nr):
        min_val = 0.0
        n_rem = nc
        for it in range(nc):
            remaining[it] = nc - it - 1
            shortest[it] = np.inf
            SC[it] = False
        for it in range(nr):
            SR[it] = False
        sink = -1
        i = cur
        while sink == -1:
            index = -1
            lowest = np.inf
            SR[i] = True
            for it in range(n_rem):
                j = remaining[it]
                r = min_val + cost[i, j] - u[i] - v[j]
                if r < shortest[j]:
                    path[j] = i
                    shortest[j] = r
                if shortest[j] < lowest or (shortest[j] == lowest and row4col[j] == -1):
                    lowest = shortest[j]
                    index = it
            min_val = lowest
            if not min_val < np.inf:
                col4row[:] = -1
                return col4row
            j = remaining[index]
            if row4col[j] == -1:
                sink = j
            else:
                i = row4col[j]
            SC[j] = True
            n_rem -= 1
            remaining[index] = remaining[n_rem]
        u[cur] += min_val
        for i in range(nr):
            if SR[i] and i != cur:
                u[i] += min_val - shortest[col4row[i]]
        for j in range(nc):
            if SC[j]:
                v[j] -= min_val - shortest[j]
        j = sink
        while True:
            i = path[j]
            row4col[j] = i
            tmp = col4row[i]
            col4row[i] = j
            j = tmp
            if i == cur:
                break
    return col4row


def _lsap_np(cost):
    nr, nc = cost.shape
    u = np.zeros(nr)
    v = np.zeros(nc)
    col4row = np.full(nr, -1, dtype=np.int64)
    row4col = np.full(nc, -1, dtype=np.int64)
    for cur in range(nr):
        shortest = np.full(nc, np.inf)
        path = np.full(nc, -1, dtype=np.int64)
        SR = np.zeros(nr, dtype=bool)
        SC = np.zeros(nc, dtype=bool)
        min_val = 0.0
        sink = -1
        i = cur
        while sink == -1:
            SR[i] = True
            r = min_val + cost[i] - u[i] - v
            better = (~SC) & (r < shortest)
            path[better] = i
            shortest[better] = r[better]
            cand = np.where(SC, np.inf, shortest)
            lowest = cand.min()
            if not lowest < np.inf:
                return np.full(nr, -1, dtype=np.int64)
            ties = np.flatnonzero(cand == lowest)
            free = ties[row4col[ties] == -1]
            j = free[-1] if free.size else ties[-1]
            min_val = lowest
            SC[j] = True
            if row4col[j] == -1:
                sink = j
            else:
                i = row4col[j]
        u[cur] += min_val
        rows = np.flatnonzero(SR)
        rows = rows[rows != cur]
        u[rows] += min_val - shortest[col4row[rows]]
        v[SC] -= min_val - shortest[SC]
        j = sink
        while True:
            i = path[j]
            row4col[j] = i
            col4row[i], j = j, col4row[i]
            if i == cur:
                break
    return col4row


ct_step = select(_ct_step_nb, _ct_step_np)
bearing_range_loglik_batch = select(_bearing_range_loglik_nb, _bearing_range_loglik_np)
position_loglik_batch = select(_position_loglik_nb, _position_loglik_np)
systematic_indices = select(_systematic_nb, _systematic_np)
resample_columns = select(_resample_columns_nb, _resample_columns_np)
lsap = select(_lsap_nb, _lsap_np)
scaled_exp = select(_scaled_exp_nb, _scaled_exp_np)
rmb_measurement = select(_rmb_measurement_nb, _rmb_measurement_np)
segment_systematic = select(_segment_systematic_nb, _segment_systematic_np)
rmb_predict_ct_rw = select(_rmb_predict_ct_rw_nb, _rmb_predict_ct_rw_np)

__all__ = [
    "HAVE_NUMBA", "OMEGA_EPS", "wrap_angle", "ct_step", "bearing_range_loglik_batch",
    "position_loglik_batch", "systematic_indices", "resample_columns", "lsap", "rmb_measurement",
    "segment_systematic", "rmb_predict_ct_rw", "scaled_exp", "EXP_FLOOR",
]
