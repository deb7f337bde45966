"""SMC robust multi-Bernoulli filter over the clutter-augmented state space.

Every Bernoulli component carries a particle set whose particles are tagged
with a class label (0 = clutter generator, 1 = target). The filter state keeps
all particles of all components in flat arrays and addresses components through
``offsets``; ``RmbState.components`` gives the per-component view.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .models import (CLUTTER, POS, TARGET, CoordinatedTurnModel, ModelSet,
                     RandomWalkModel)

R_MAX = 1.0 - 1e-6


@dataclass(frozen=True)
class HybridBernoulli:
    r: float
    x: np.ndarray
    u: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        if len(self.w) == 0:
            raise ValueError("component has no particles")

    @property
    def clutter_fraction(self):
        return float(self.w[self.u == CLUTTER].sum())


@dataclass(frozen=True)
class RmbParams:
    n_particles: int = 1000
    r_prune: float = 1e-3
    m_max: int = 100


@dataclass(frozen=True)
class RmbState:
    r: np.ndarray
    x: np.ndarray
    u: np.ndarray
    w: np.ndarray
    offsets: np.ndarray
    frame: int = 0

    @classmethod
    def empty(cls, dim, frame=0):
        return cls(np.zeros(0), np.zeros((0, dim)), np.zeros(0, np.int8), np.zeros(0),
                   np.zeros(1, np.int64), frame)

    @classmethod
    def from_components(cls, comps, dim, frame=0):
        if not comps:
            return cls.empty(dim, frame)
        sizes = [len(c.w) for c in comps]
        if min(sizes) == 0:
            raise ValueError("component has no particles")
        return cls(
            np.array([c.r for c in comps], dtype=float),
            np.concatenate([np.asarray(c.x, dtype=float).reshape(-1, dim) for c in comps]),
            np.concatenate([np.asarray(c.u, dtype=np.int8) for c in comps]),
            np.concatenate([np.asarray(c.w, dtype=float) for c in comps]),
            np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64),
            frame,
        )

    @classmethod
    def concat(cls, parts, frame):
        dim = parts[0].x.shape[1]
        parts = [p for p in parts if len(p.r)]
        if not parts:
            return cls.empty(dim, frame)
        sizes = np.concatenate([np.diff(p.offsets) for p in parts])
        return cls(
            np.concatenate([p.r for p in parts]),
            np.concatenate([p.x for p in parts]),
            np.concatenate([p.u for p in parts]),
            np.concatenate([p.w for p in parts]),
            np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64),
            frame,
        )

    def __len__(self):
        return len(self.r)

    @property
    def comp_index(self):
        """Component id of every particle."""
        return np.repeat(np.arange(len(self.r)), np.diff(self.offsets))

    @property
    def components(self):
        o = self.offsets
        return [HybridBernoulli(float(self.r[i]), self.x[o[i]:o[i + 1]], self.u[o[i]:o[i + 1]],
                                self.w[o[i]:o[i + 1]]) for i in range(len(self.r))]

    def segment_sum(self, values):
        if len(self.r) == 0:
            return np.zeros((0,) + np.shape(values)[1:])
        return np.add.reduceat(values, self.offsets[:-1], axis=0)


class Workspace:
    """Grow-only scratch buffers reused from frame to frame.

    Large temporaries that are allocated fresh every frame cost a page fault
    per 4 KiB on first touch. Arrays handed out here are views that stay valid
    only until the next call asking for the same name.
    """

    def __init__(self):
        self._bufs = {}

    def get(self, name, shape, dtype=np.float64):
        n = int(np.prod(shape))
        buf = self._bufs.get(name)
        if buf is None or buf.size < n or buf.dtype != dtype:
            buf = np.empty(n + n // 4, dtype)
            self._bufs[name] = buf
        return buf[:n].reshape(shape)


def _empty(work, name, shape, dtype=np.float64):
    return np.empty(shape, dtype) if work is None else work.get(name, shape, dtype)


@dataclass(frozen=True)
class ClutterEstimate:
    lambda_hat: float
    n_clutter_gen: float
    frame: int


def _normalize_segments(state, w, idx=None):
    tot = state.segment_sum(w)
    idx = state.comp_index if idx is None else idx
    safe = np.where(tot > 0, tot, 1.0)
    out = w / safe[idx]
    # components whose weights vanished fall back to uniform
    dead = tot[idx] <= 0
    if np.any(dead):
        n = np.diff(state.offsets)[idx]
        out[dead] = 1.0 / n[dead]
    return out


def sample_birth(birth, models: ModelSet, n_particles, rng, frame=0):
    """Particle components for the birth entries."""
    dim = models.dim
    if not birth:
        return RmbState.empty(dim, frame)
    xs = []
    for b in birth:
        if b.density is not None:
            x = b.density.sample(n_particles, rng)
        else:
            x0, x1, y0, y1 = models.sensor.surveillance_box()
            x = np.zeros((n_particles, dim))
            x[:, POS[0]] = rng.uniform(x0, x1, n_particles)
            x[:, POS[1]] = rng.uniform(y0, y1, n_particles)
        xs.append(x)
    nb = len(birth)
    return RmbState(
        np.array([b.r for b in birth], dtype=float),
        np.concatenate(xs),
        np.repeat(np.array([b.u for b in birth], dtype=np.int8), n_particles),
        np.full(nb * n_particles, 1.0 / n_particles),
        np.arange(nb + 1, dtype=np.int64) * n_particles,
        frame,
    )


def rmb_predict(state: RmbState, models: ModelSet, birth, rng, n_particles=1000, work=None):
    """Survival-weighted propagation of every component, then the birth components.

    With a ``Workspace`` the result's particle arrays live in its buffers.
    """
    if np.any(np.diff(state.offsets) == 0):
        raise ValueError("component has no particles")
    frame = state.frame + 1
    newborn = sample_birth(birth, models, n_particles, rng, frame)
    if len(state.r) == 0:
        return newborn
    mo, cm = models.motion, models.clutter_motion
    if isinstance(mo, CoordinatedTurnModel) and isinstance(cm, RandomWalkModel):
        P, Pb = len(state.w), len(newborn.w)
        n_t = int(np.count_nonzero(state.u == TARGET))
        noise = rng.standard_normal(out=_empty(work, "noise", 3 * n_t + 2 * (P - n_t)))
        x = _empty(work, "pred_x", (P + Pb, state.x.shape[1]))
        w = _empty(work, "pred_w", P + Pb)
        x[P:] = newborn.x
        w[P:] = newborn.w
        surv = kernels.rmb_predict_ct_rw(
            state.x, state.u, state.w, state.offsets, models.probs.p_S0, models.probs.p_S1,
            float(mo.T), float(mo.sigma_w), float(mo.sigma_omega), float(cm.sigma_rw), noise,
            x, w)
        return RmbState(np.concatenate([state.r * surv, newborn.r]), x,
                        np.concatenate([state.u, newborn.u]), w,
                        np.concatenate([state.offsets, P + newborn.offsets[1:]]), frame)
    ps = models.probs.p_S(state.u)
    surv = state.segment_sum(state.w * ps)
    w = _normalize_segments(state, state.w * ps)
    x = state.x.copy()
    tgt = state.u == TARGET
    if np.any(tgt):
        x[tgt] = mo.sample(state.x[tgt], rng)
    if not np.all(tgt):
        x[~tgt] = cm.sample(state.x[~tgt], rng)
    survived = RmbState(state.r * surv, x, state.u, w, state.offsets, frame)
    return RmbState.concat([survived, newborn], frame)


def _detection_likelihood(state, Z, models):
    """``p_D(u) g_u(z|x)`` for every particle and measurement."""
    P = len(state.w)
    G = np.empty((P, len(Z)))
    tgt = state.u == TARGET
    if np.any(tgt):
        G[tgt] = models.probs.p_D1 * np.exp(models.sensor.loglik_batch(state.x[tgt], Z))
    G[~tgt] = models.probs.p_D0 / models.sensor.area
    return G


def _likelihood_inputs(state, Z, models, r):
    tgt = state.u == TARGET
    if len(Z):
        Gt = kernels.scaled_exp(models.sensor.loglik_batch(state.x[tgt], Z), models.probs.p_D1)
    else:
        Gt = np.zeros((int(tgt.sum()), 0))
    return np.ascontiguousarray(Gt)


def _existence(r, rho, A):
    denom = 1.0 - r * rho
    r_leg = r * (1.0 - rho) / denom
    num = ((r * (1.0 - r) / denom ** 2)[:, None] * A).sum(axis=0)
    den = ((r / denom)[:, None] * A).sum(axis=0)
    r_upd = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return r_leg, r_upd


def _clamp(r):
    if np.any(r >= 1.0):
        warnings.warn("existence probability of 1 clamped before update", RuntimeWarning)
    return np.minimum(r, R_MAX)


def _update_resampled(state, Z, models, rng, n, work=None):
    """Update where each measurement-updated component is drawn down to ``n`` particles.

    Returns ``(r, u, w, offsets, src)``: the updated particle ``k`` is the
    predicted particle ``src[k]``, so positions need not be copied yet.
    """
    r = _clamp(state.r)
    m = len(Z)
    p = models.probs
    Gt = _likelihood_inputs(state, Z, models, r)
    rho, w_leg, A, picks = kernels.rmb_measurement(
        state.offsets, state.w, state.u, Gt, p.p_D0, p.p_D1, p.p_D0 / models.sensor.area, r, n,
        rng.random(m))
    r_leg, r_upd = _existence(r, rho, A)
    P = len(state.w)
    src = _empty(work, "src", P + m * n, np.int64)
    src[:P] = np.arange(P)
    src[P:] = picks.ravel()
    w = _empty(work, "upd_w", P + m * n)
    w[:P] = w_leg
    w[P:] = 1.0 / n
    u = np.concatenate([state.u, np.take(state.u, src[P:])])
    offsets = np.concatenate([state.offsets, P + n * np.arange(1, m + 1)])
    return np.concatenate([r_leg, r_upd]), u, w, offsets, src


def rmb_update(state: RmbState, Z, models: ModelSet, rng=None, n_particles=1000):
    """Legacy components followed by one measurement-updated component per ``z``.

    With ``rng`` given, each measurement-updated component is resampled down to
    ``n_particles``; otherwise it keeps the full weighted union of predicted
    particles.
    """
    Z = np.asarray(Z, dtype=float).reshape(-1, 2)
    if len(state.r) == 0:
        return state
    if rng is not None:
        r, u, w, offsets, src = _update_resampled(state, Z, models, rng, n_particles)
        return RmbState(r, np.take(state.x, src, axis=0), u, w, offsets, state.frame)

    r = _clamp(state.r)
    m = len(Z)
    p = models.probs
    Gt = _likelihood_inputs(state, Z, models, r)
    rho, w_leg, A, _ = kernels.rmb_measurement(
        state.offsets, state.w, state.u, Gt, p.p_D0, p.p_D1, p.p_D0 / models.sensor.area, r, 1,
        np.zeros(m))
    r_leg, r_upd = _existence(r, rho, A)
    legacy = RmbState(r_leg, state.x, state.u, w_leg, state.offsets, state.frame)
    if m == 0:
        return legacy
    P = len(state.w)
    G = _detection_likelihood(state, Z, models)
    base = state.w * (r / (1.0 - r))[state.comp_index]
    W = base[:, None] * G
    dead = ~(W.sum(axis=0) > 0)
    W[:, dead] = base[:, None] if base.sum() > 0 else 1.0
    W = W / W.sum(axis=0)
    upd = RmbState(r_upd, np.tile(state.x, (m, 1)), np.tile(state.u, m), W.T.ravel(),
                   np.arange(m + 1, dtype=np.int64) * P, state.frame)
    return RmbState.concat([legacy, upd], state.frame)


def _clutter_rate(r, u, w, offsets, p_D0, frame):
    if len(r) == 0:
        return ClutterEstimate(0.0, 0.0, frame)
    frac0 = np.add.reduceat(np.where(u == CLUTTER, w, 0.0), offsets[:-1])
    n0 = max(float(np.sum(r * frac0)), 0.0)
    return ClutterEstimate(n0 * p_D0, n0, frame)


def estimate_clutter_rate(state: RmbState, p_D0):
    """Expected clutter count: clutter-generator EAP number times ``p_D0``."""
    return _clutter_rate(state.r, state.u, state.w, state.offsets, p_D0, state.frame)


def _resample(r, u, w, offsets, x, params: RmbParams, rng, frame, src=None):
    keep = np.flatnonzero(r >= params.r_prune)
    if len(keep) > params.m_max:
        top = np.argsort(-r[keep], kind="stable")[:params.m_max]
        keep = np.sort(keep[top])
    n = params.n_particles
    if len(keep) == 0:
        return RmbState.empty(x.shape[1], frame)
    pick = kernels.segment_systematic(w, offsets, keep.astype(np.int64), rng.random(len(keep)), n)
    rows = pick if src is None else np.take(src, pick)
    return RmbState(r[keep], np.take(x, rows, axis=0), np.take(u, pick),
                    np.full(len(pick), 1.0 / n),
                    np.arange(len(keep) + 1, dtype=np.int64) * n, frame)


def prune_merge_resample(state: RmbState, params: RmbParams, rng):
    """Prune by existence, cap the component count, systematic-resample each."""
    return _resample(state.r, state.u, state.w, state.offsets, state.x, params, rng, state.frame)


def rmb_step(state: RmbState, Z, models: ModelSet, birth, params: RmbParams, rng, work=None):
    """Predict, update, estimate the clutter rate, prune and resample in one go.

    Equivalent to ``rmb_predict``, ``rmb_update(rng=rng)``,
    ``estimate_clutter_rate`` and ``prune_merge_resample`` in turn, but the
    updated particle set is never materialized. Returns ``(state, estimate)``.
    """
    Z = np.asarray(Z, dtype=float).reshape(-1, 2)
    n = params.n_particles
    pred = rmb_predict(state, models, birth, rng, n_particles=n, work=work)
    if len(pred.r) == 0:
        est = ClutterEstimate(0.0, 0.0, pred.frame)
        return _resample(pred.r, pred.u, pred.w, pred.offsets, pred.x, params, rng, pred.frame), est
    r, u, w, offsets, src = _update_resampled(pred, Z, models, rng, n, work)
    est = _clutter_rate(r, u, w, offsets, models.probs.p_D0, pred.frame)
    return _resample(r, u, w, offsets, pred.x, params, rng, pred.frame, src), est
