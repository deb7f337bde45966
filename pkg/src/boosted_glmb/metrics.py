"""OSPA distance and CLEAR-style track-quality indexes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assignment import optimal_assignment

__all__ = ["OspaParams", "MotReport", "ospa_distance", "optimal_assignment", "evaluate_tracks",
           "ospa_series", "frame_positions"]


@dataclass(frozen=True)
class OspaParams:
    p: float = 1.0
    c: float = 100.0

    def __post_init__(self):
        if self.p < 1 or self.c <= 0:
            raise ValueError("OSPA needs p >= 1 and c > 0")


def ospa_distance(X, Y, params: OspaParams = OspaParams()):
    """OSPA between two point sets given as ``(n, d)`` arrays."""
    X = np.asarray(X, dtype=float).reshape(len(X), -1) if len(X) else np.zeros((0, 2))
    Y = np.asarray(Y, dtype=float).reshape(len(Y), -1) if len(Y) else np.zeros((0, 2))
    if len(X) > len(Y):
        X, Y = Y, X
    m, n = len(X), len(Y)
    p, c = params.p, params.c
    if n == 0:
        return 0.0
    if m == 0:
        return float(c)
    D = np.minimum(np.linalg.norm(X[:, None, :] - Y[None, :, :], axis=2), c) ** p
    _, _, cost = optimal_assignment(D)
    return float(((cost + c ** p * (n - m)) / n) ** (1.0 / p))


@dataclass(frozen=True)
class MotReport:
    recall: float
    precision: float
    fpf: float
    gt: int
    mt: float
    pt: float
    ml: float
    frag: int
    ids: int

    COLUMNS = ("Recall", "Precision", "FPF", "GT", "MT", "PT", "ML", "Frag", "IDS")

    def row(self):
        return (self.recall, self.precision, self.fpf, self.gt, self.mt, self.pt, self.ml,
                self.frag, self.ids)

    def table(self):
        head = " ".join(f"{c:>9}" for c in self.COLUMNS)
        vals = [f"{100 * self.recall:8.1f}%", f"{100 * self.precision:8.1f}%", f"{self.fpf:9.2f}",
                f"{self.gt:9d}", f"{100 * self.mt:8.1f}%", f"{100 * self.pt:8.1f}%",
                f"{100 * self.ml:8.1f}%", f"{self.frag:9d}", f"{self.ids:9d}"]
        return head + "\n" + " ".join(vals)


def frame_positions(tracks):
    """``{frame: [(label, (x, y)), ...]}`` from a list of tracks."""
    out = {}
    for t in tracks:
        for f, xy in zip(t.frames, t.positions()):
            out.setdefault(f, []).append((t.label, xy))
    return out


def _match(gt_objs, est_objs, radius):
    if not gt_objs or not est_objs:
        return []
    G = np.array([xy for _, xy in gt_objs])
    E = np.array([xy for _, xy in est_objs])
    D = np.linalg.norm(G[:, None, :] - E[None, :, :], axis=2)
    big = 1e6 * (radius + D.max() + 1.0)
    rows, cols, _ = optimal_assignment(np.where(D <= radius, D, big))
    return [(gt_objs[i][0], est_objs[j][0]) for i, j in zip(rows, cols) if D[i, j] <= radius]


def evaluate_tracks(est, gt, match_radius=50.0):
    """Per-frame optimal position matching within ``match_radius``."""
    if not gt:
        raise ValueError("ground truth is empty")
    G = frame_positions(gt)
    E = frame_positions(est)
    frames = sorted(set(G) | set(E))
    n_gt = sum(len(v) for v in G.values())
    n_est = sum(len(v) for v in E.values())
    matched = {}  # (gt label, frame) -> est label
    for f in frames:
        for g, e in _match(G.get(f, []), E.get(f, []), match_radius):
            matched[(g, f)] = e
    n_match = len(matched)

    mt = pt = ml = frag = ids = 0
    for t in gt:
        hits = [(t.label, f) in matched for f in t.frames]
        cov = sum(hits) / len(hits)
        if cov >= 0.8:
            mt += 1
        elif cov <= 0.2:
            ml += 1
        else:
            pt += 1
        frag += sum(1 for a, b in zip(hits, hits[1:]) if a and not b)
        seq = [matched[(t.label, f)] for f in t.frames if (t.label, f) in matched]
        ids += sum(1 for a, b in zip(seq, seq[1:]) if a != b)
    n = len(gt)
    return MotReport(
        recall=n_match / n_gt if n_gt else 0.0,
        precision=n_match / n_est if n_est else 0.0,
        fpf=(n_est - n_match) / len(frames) if frames else 0.0,
        gt=n, mt=mt / n, pt=pt / n, ml=ml / n, frag=frag, ids=ids,
    )


def ospa_series(est, gt, frames, params: OspaParams = OspaParams()):
    """Per-frame OSPA over ``frames`` between two track lists (positions only)."""
    E = frame_positions(est)
    G = frame_positions(gt)
    return np.array([
        ospa_distance(np.array([xy for _, xy in E.get(f, [])]).reshape(-1, 2),
                      np.array([xy for _, xy in G.get(f, [])]).reshape(-1, 2), params)
        for f in frames])
