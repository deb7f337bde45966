"""Boosted GLMB: the RMB clutter estimate feeds the GLMB tracker every frame."""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .config import TrackerConfig
from .glmb import GlmbDensity, extract_estimates, glmb_predict, glmb_update
from .rmb import ClutterEstimate, RmbState, Workspace, rmb_step


@dataclass
class Track:
    label: object
    frames: list = field(default_factory=list)
    states: list = field(default_factory=list)

    @property
    def birth_frame(self):
        return self.frames[0] if self.frames else None

    @property
    def last_seen(self):
        return self.frames[-1] if self.frames else None

    def append(self, frame, state):
        if self.frames and frame <= self.frames[-1]:
            raise ValueError("track frames must be strictly increasing")
        self.frames.append(int(frame))
        self.states.append(np.asarray(state, dtype=float))

    def positions(self):
        S = np.array(self.states).reshape(len(self.states), -1)
        return S[:, [0, 2]] if S.shape[1] > 2 else S


@dataclass(frozen=True)
class FrameResult:
    frame: int
    clutter: ClutterEstimate
    lambda_used: float
    estimates: list
    n_hypotheses: int
    duration: float


def make_rng(seed):
    """Tracker random stream; SFC64 draws normals faster than the default PCG64."""
    return np.random.Generator(np.random.SFC64(seed))


def _lambda_used(cfg: TrackerConfig, history):
    if cfg.clutter.fixed_rate is not None:
        lam = cfg.clutter.fixed_rate
    else:
        lam = float(np.mean(history))
    return max(lam, cfg.clutter.lambda_min)


def clutter_step(rmb: RmbState, Z, cfg: TrackerConfig, rng, work=None):
    """RMB predict/update, raw clutter-rate estimate, then prune and resample."""
    return rmb_step(rmb, Z, cfg.models, cfg.rmb_birth, cfg.rmb, rng, work)


def process_frame(rmb: RmbState, glmb: GlmbDensity, Z, cfg: TrackerConfig, rng, history=None,
                  work=None):
    """One tracker step.

    ``history`` is a deque of recent raw clutter estimates used for the moving
    average; it is appended to in place. ``work`` is an optional ``Workspace``
    for the RMB temporaries. Returns ``(rmb, glmb, FrameResult)``.
    """
    t0 = time.perf_counter()
    Z = np.asarray(Z, dtype=float).reshape(-1, 2)
    frame = glmb.frame + 1
    models = cfg.models
    if history is None:
        history = deque(maxlen=cfg.clutter.smoothing_window)

    if cfg.clutter.fixed_rate is None:
        rmb, est = clutter_step(rmb, Z, cfg, rng, work)
        history.append(est.lambda_hat)
    else:
        est = ClutterEstimate(float(cfg.clutter.fixed_rate), float("nan"), frame)
    lam = _lambda_used(cfg, history)

    glmb = glmb_predict(glmb, models, cfg.birth, cfg.glmb, frame=frame)
    glmb = glmb_update(glmb, Z, models, lam / models.sensor.area, cfg.glmb)
    estimates = extract_estimates(glmb)
    result = FrameResult(frame, ClutterEstimate(est.lambda_hat, est.n_clutter_gen, frame), lam,
                         estimates, len(glmb.hypotheses), time.perf_counter() - t0)
    return rmb, glmb, result


class BoostedGlmbTracker:
    """Stateful frame-by-frame wrapper around ``process_frame``."""

    def __init__(self, cfg: TrackerConfig):
        self.cfg = cfg
        self.rng = make_rng(cfg.seed)
        self.rmb = RmbState.empty(cfg.models.dim)
        self.glmb = GlmbDensity()
        self.history = deque(maxlen=cfg.clutter.smoothing_window)
        self.work = Workspace()
        self.tracks = {}
        self.results = []

    def step(self, Z):
        self.rmb, self.glmb, res = process_frame(self.rmb, self.glmb, Z, self.cfg, self.rng,
                                                 self.history, self.work)
        for label, state in res.estimates:
            self.tracks.setdefault(label, Track(label)).append(res.frame, state)
        self.results.append(res)
        return res


def run_sequence(detections, cfg: TrackerConfig):
    """Run over every frame; returns ``(tracks sorted by label, frame results)``."""
    if len(detections) == 0:
        raise ValueError("empty detection sequence")
    tracker = BoostedGlmbTracker(cfg)
    for Z in detections:
        tracker.step(Z)
    tracks = [tracker.tracks[k] for k in sorted(tracker.tracks)]
    return tracks, tracker.results


def run_clutter_only(detections, cfg: TrackerConfig):
    """Raw per-frame clutter estimates from the RMB alone.

    The GLMB never feeds back into the RMB and draws no random numbers, so
    this matches the ``lambda_hat`` sequence of ``run_sequence`` exactly.
    """
    rng = make_rng(cfg.seed)
    rmb = RmbState.empty(cfg.models.dim)
    work = Workspace()
    out = []
    for Z in detections:
        rmb, est = clutter_step(rmb, Z, cfg, rng, work)
        out.append(est)
    return out
