"""Delta-GLMB tracker with Gaussian-mixture single-object densities.

A ``GlmbDensity`` stores a table of labeled single-object densities and a
list of hypotheses that index into it. Each table entry belongs to exactly one
association history, so two hypotheses pointing at the same entry share the
same density for that label.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assignment import k_best_subsets, ranked_assignment_log
from .models import TARGET, GaussianMixture, ModelSet

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, order=True)
class Label:
    birth_frame: int
    birth_index: int

    def __str__(self):
        return f"{self.birth_frame}:{self.birth_index}"

    @classmethod
    def parse(cls, text):
        a, b = str(text).split(":")
        return cls(int(a), int(b))


@dataclass(frozen=True)
class LabeledDensity:
    label: Label
    density: GaussianMixture


@dataclass(frozen=True)
class GlmbHypothesis:
    log_weight: float
    tracks: tuple  # indices into GlmbDensity.tracks, ordered by label

    @property
    def weight(self):
        return math.exp(self.log_weight)


@dataclass(frozen=True)
class GlmbParams:
    k_pred: int = 100
    k_upd: int = 100
    h_max: int = 1000
    hyp_prune: float = 1e-6
    gm_max: int = 10
    gm_prune: float = 1e-5
    gate_prob: float | None = 0.9999
    proportional: bool = True

    def budget(self, K, w):
        if not self.proportional:
            return K
        return max(1, min(K, math.ceil(K * w)))


@dataclass(frozen=True)
class GlmbDensity:
    tracks: tuple = ()
    hypotheses: tuple = (GlmbHypothesis(0.0, ()),)
    frame: int = 0

    @property
    def weights(self):
        return np.array([h.weight for h in self.hypotheses])

    def labels(self, hyp):
        return [self.tracks[t].label for t in hyp.tracks]

    def cardinality_distribution(self):
        n = max((len(h.tracks) for h in self.hypotheses), default=0)
        out = np.zeros(n + 1)
        for h in self.hypotheses:
            out[len(h.tracks)] += h.weight
        return out


def _logsumexp(a):
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return -np.inf
    mx = a.max()
    if not np.isfinite(mx):
        return mx
    return float(mx + np.log(np.exp(a - mx).sum()))


def _log(p):
    return math.log(p) if p > 0 else -math.inf


def _finalize(tracks, table, params: GlmbParams, frame):
    """Normalize, prune, cap and compact a ``{track-tuple: log-weight}`` table."""
    if not table:
        raise FloatingPointError("every hypothesis has zero weight")
    keys = list(table.keys())
    lw = np.array([table[k] for k in keys])
    lw -= _logsumexp(lw)
    order = sorted(range(len(keys)), key=lambda i: (-lw[i], keys[i]))
    thr = _log(params.hyp_prune)
    order = [i for i in order if lw[i] >= thr] or order[:1]
    order = order[:params.h_max]
    lw = lw[order]
    lw -= _logsumexp(lw)
    used = sorted({t for i in order for t in keys[i]})
    remap = {t: k for k, t in enumerate(used)}
    new_tracks = tuple(tracks[t] for t in used)
    hyps = tuple(GlmbHypothesis(float(w), tuple(remap[t] for t in keys[i]))
                 for w, i in zip(lw, order))
    return GlmbDensity(new_tracks, hyps, frame)


def _predict_mixture(gm: GaussianMixture, motion):
    means, covs = [], []
    for m, P in zip(gm.means, gm.covs):
        m2, P2 = motion.predict_moments(m, P)
        means.append(m2)
        covs.append(P2)
    return GaussianMixture(gm.weights.copy(), np.array(means), np.array(covs))


def glmb_predict(density: GlmbDensity, models: ModelSet, birth, params=GlmbParams(), frame=None):
    """Survival/birth prediction with k-best truncation of each hypothesis."""
    frame = density.frame + 1 if frame is None else frame
    births = [b for b in birth if b.u == TARGET]
    p_s = models.probs.p_S1
    tracks = [LabeledDensity(t.label, _predict_mixture(t.density, models.motion))
              for t in density.tracks]
    n_old = len(tracks)
    for i, b in enumerate(births):
        tracks.append(LabeledDensity(Label(frame, i), b.density))
    log_rb_in = np.array([_log(b.r) for b in births])
    log_rb_out = np.array([_log(1.0 - b.r) for b in births])

    table = {}
    for h in density.hypotheses:
        n = len(h.tracks)
        log_in = np.concatenate([np.full(n, _log(p_s)), log_rb_in])
        log_out = np.concatenate([np.full(n, _log(1.0 - p_s)), log_rb_out])
        K = params.budget(params.k_pred, h.weight)
        masks, logw = k_best_subsets(log_in, log_out, K)
        ids = np.array(list(h.tracks) + list(range(n_old, n_old + len(births))), dtype=int)
        for mask, lw in zip(masks, logw):
            key = tuple(ids[mask])
            val = h.log_weight + lw
            table[key] = np.logaddexp(table[key], val) if key in table else val
    return _finalize(tracks, table, params, frame)


def _gm_update(gm: GaussianMixture, Z, sensor, gate):
    """Per-measurement log marginal likelihoods and updated mixtures.

    Returns ``(loglik (m,), [GaussianMixture or None] * m)``; gated-out
    measurements get ``-inf`` and ``None``.
    """
    m = len(Z)
    n = len(gm)
    logq = np.full((n, m), -np.inf)
    post_means = np.empty((n, m, gm.means.shape[1]))
    post_covs = []
    inside = np.zeros(m, dtype=bool)
    for c in range(n):
        mu, P = gm.means[c], gm.covs[c]
        zhat, H = sensor.linearize(mu)
        S = H @ P @ H.T + sensor.R
        S = 0.5 * (S + S.T)
        L = np.linalg.cholesky(S)
        E = sensor.residual(Z, zhat)
        sol = np.linalg.solve(L, E.T)  # (2, m)
        d2 = (sol * sol).sum(axis=0)
        inside |= d2 <= gate
        logdet = 2.0 * np.log(np.diag(L)).sum()
        logq[c] = _log(gm.weights[c]) - LOG_2PI - 0.5 * logdet - 0.5 * d2
        K = np.linalg.solve(S, H @ P).T  # P H^T S^-1
        post_means[c] = mu + E @ K.T
        Pc = P - K @ S @ K.T
        post_covs.append(0.5 * (Pc + Pc.T))
    loglik = np.full(m, -np.inf)
    updated = [None] * m
    for j in np.flatnonzero(inside):
        lj = _logsumexp(logq[:, j])
        if not np.isfinite(lj):
            continue
        loglik[j] = lj
        updated[j] = (logq[:, j] - lj, post_means[:, j], post_covs)
    return loglik, updated


def _cap_mixture(logw, means, covs, params: GlmbParams):
    w = np.exp(logw)
    keep = np.flatnonzero(w >= params.gm_prune)
    if len(keep) == 0:
        keep = np.array([int(np.argmax(w))])
    keep = keep[np.argsort(-w[keep], kind="stable")][:params.gm_max]
    w = w[keep] / w[keep].sum()
    return GaussianMixture(w, means[keep], np.array([covs[k] for k in keep]))


def glmb_update(density: GlmbDensity, Z, models: ModelSet, kappa, params=GlmbParams()):
    """Measurement update with ranked-assignment truncation per hypothesis.

    ``kappa`` is the clutter intensity at a measurement (rate over region area).
    """
    Z = np.asarray(Z, dtype=float).reshape(-1, 2)
    m = len(Z)
    if m and not kappa > 0:
        raise ValueError("clutter intensity must be positive when measurements exist")
    p_d = models.probs.p_D1
    gate = np.inf if params.gate_prob is None else -2.0 * math.log(1.0 - params.gate_prob)
    log_miss = _log(1.0 - p_d)
    log_det = _log(p_d) - (math.log(kappa) if m else 0.0)

    n_tr = len(density.tracks)
    scores = np.full((n_tr, m + 1), -np.inf)
    scores[:, 0] = log_miss
    cache = []
    for t, tr in enumerate(density.tracks):
        if m:
            ll, upd = _gm_update(tr.density, Z, models.sensor, gate)
            scores[t, 1:] = ll + log_det
        else:
            upd = []
        cache.append(upd)

    new_tracks = []
    slot = {}

    def entry(t, j):
        key = (t, j)
        if key not in slot:
            tr = density.tracks[t]
            if j == 0:
                new_tracks.append(tr)
            else:
                logw, means, covs = cache[t][j - 1]
                new_tracks.append(LabeledDensity(tr.label, _cap_mixture(logw, means, covs, params)))
            slot[key] = len(new_tracks) - 1
        return slot[key]

    table = {}
    for h in density.hypotheses:
        rows = list(h.tracks)
        if not rows:
            table[()] = h.log_weight
            continue
        K = params.budget(params.k_upd, h.weight)
        thetas, logw = ranked_assignment_log(scores[rows], K)
        for th, lw in zip(thetas, logw):
            key = tuple(entry(t, int(j)) for t, j in zip(rows, th))
            val = h.log_weight + lw
            table[key] = np.logaddexp(table[key], val) if key in table else val
    return _finalize(new_tracks, table, params, density.frame)


def extract_estimates(density: GlmbDensity):
    """MAP cardinality, then the best hypothesis of that cardinality."""
    if not density.hypotheses:
        return []
    card = density.cardinality_distribution()
    n_star = int(np.argmax(card))
    best = max((h for h in density.hypotheses if len(h.tracks) == n_star),
               key=lambda h: h.log_weight)
    return [(density.tracks[t].label, density.tracks[t].density.mean()) for t in best.tracks]
