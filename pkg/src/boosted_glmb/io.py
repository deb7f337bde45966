"""Detection, track and clutter-log files.

All files are plain CSV with a decimal point regardless of locale. Writers go
through a temporary file in the target directory and an atomic rename.
"""
from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .glmb import Label
from .pipeline import Track

FORMATS = ("mot-csv", "bearing-range-csv")
TRACK_HEADER = ("frame", "id", "x", "y", "vx", "vy")
LAMBDA_HEADER = ("frame", "lambda_hat", "n_clutter_gen", "lambda_used")


class DataError(ValueError):
    """Malformed or empty input file."""


def _rows(path):
    """Yield ``(line_number, fields)`` for non-blank, non-comment rows."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise DataError(f"{path}: not a text file ({e})") from None
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        yield n, [f.strip() for f in s.split(",")]


def _num(field, path, n):
    try:
        v = float(field)
    except ValueError:
        raise DataError(f"{path}:{n}: not a number: {field!r}") from None
    if not math.isfinite(v):
        raise DataError(f"{path}:{n}: non-finite value {field!r}")
    return v


def _frame(field, path, n):
    v = _num(field, path, n)
    if v != int(v) or v < 1:
        raise DataError(f"{path}:{n}: frame must be an integer >= 1, got {field!r}")
    return int(v)


def _is_header(fields):
    return fields[0].lower() == "frame"


def load_detections(path, format="mot-csv"):
    """Per-frame ``(m, 2)`` arrays, dense from frame 1 to the last frame seen.

    ``mot-csv`` rows are ``frame,id,left,top,width,height[,conf,...]`` and map to
    box centres; ``bearing-range-csv`` rows are ``frame,theta,range``.
    """
    if format not in FORMATS:
        raise DataError(f"unknown detection format {format!r}; expected one of {FORMATS}")
    need = 6 if format == "mot-csv" else 3
    by_frame = {}
    seen = False
    for n, f in _rows(path):
        if not seen and _is_header(f):
            seen = True
            continue
        seen = True
        if len(f) < need:
            raise DataError(f"{path}:{n}: expected at least {need} columns, got {len(f)}")
        k = _frame(f[0], path, n)
        if format == "mot-csv":
            left, top, w, h = (_num(v, path, n) for v in f[2:6])
            if w < 0 or h < 0:
                raise DataError(f"{path}:{n}: negative box size")
            z = (left + w / 2.0, top + h / 2.0)
        else:
            z = (_num(f[1], path, n), _num(f[2], path, n))
            if z[1] < 0:
                raise DataError(f"{path}:{n}: negative range")
        by_frame.setdefault(k, []).append(z)
    if not seen:
        raise DataError(f"{path}: empty detection file")
    last = max(by_frame, default=0)
    if last == 0:
        raise DataError(f"{path}: no detection rows")
    return [np.array(by_frame.get(k, []), dtype=float).reshape(-1, 2) for k in range(1, last + 1)]


def _atomic_write(path, write):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _fmt(v):
    return f"{float(v):.6f}"


def id_key(label):
    """Sort key for serialized ids: labels by (birth frame, index), then integers, then text."""
    if isinstance(label, Label):
        return (0, label.birth_frame, label.birth_index, "")
    s = str(label)
    try:
        lab = Label.parse(s)
        return (0, lab.birth_frame, lab.birth_index, "")
    except ValueError:
        pass
    if s.lstrip("-").isdigit():
        return (1, int(s), 0, "")
    return (2, 0, 0, s)


def _track_row(frame, label, state):
    s = np.asarray(state, dtype=float).ravel()
    if len(s) >= 4:
        x, vx, y, vy = s[0], s[1], s[2], s[3]
    else:
        x, y, vx, vy = s[0], s[1], 0.0, 0.0
    return (frame, str(label), _fmt(x), _fmt(y), _fmt(vx), _fmt(vy))


def write_tracks(tracks, path):
    """One row per (frame, id), ordered by frame then id."""
    rows = []
    for t in tracks:
        for k, x in zip(t.frames, t.states):
            rows.append((int(k), id_key(t.label), _track_row(int(k), t.label, x)))
    rows.sort(key=lambda r: (r[0], r[1]))
    keys = [(r[0], r[2][1]) for r in rows]
    if len(set(keys)) != len(keys):
        raise ValueError("duplicate (frame, id) in track output")

    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACK_HEADER)
        w.writerows(r[2] for r in rows)

    _atomic_write(path, write)


def load_tracks(path):
    """Tracks from a file written by ``write_tracks``; states are ``[x, vx, y, vy]``."""
    out = {}
    seen = False
    for n, f in _rows(path):
        if not seen and _is_header(f):
            seen = True
            continue
        seen = True
        if len(f) < 4:
            raise DataError(f"{path}:{n}: expected frame,id,x,y[,vx,vy]")
        k = _frame(f[0], path, n)
        x, y = _num(f[2], path, n), _num(f[3], path, n)
        vx = _num(f[4], path, n) if len(f) > 4 and f[4] else 0.0
        vy = _num(f[5], path, n) if len(f) > 5 and f[5] else 0.0
        t = out.setdefault(f[1], Track(f[1]))
        if t.frames and k <= t.frames[-1]:
            raise DataError(f"{path}:{n}: id {f[1]} repeats or goes back in frame order")
        t.append(k, [x, vx, y, vy])
    if not seen:
        raise DataError(f"{path}: empty track file")
    return [out[k] for k in sorted(out, key=id_key)]


def write_detections(detections, path, format="mot-csv"):
    """Inverse of ``load_detections``; mot-csv rows use zero-size boxes."""
    if format not in FORMATS:
        raise DataError(f"unknown detection format {format!r}")

    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        if format == "mot-csv":
            w.writerow(("frame", "id", "bb_left", "bb_top", "bb_width", "bb_height", "conf"))
        else:
            w.writerow(("frame", "theta", "range"))
        for k, Z in enumerate(detections, start=1):
            for z in np.asarray(Z, dtype=float).reshape(-1, 2):
                if format == "mot-csv":
                    w.writerow((k, -1, _fmt(z[0]), _fmt(z[1]), _fmt(0), _fmt(0), _fmt(1)))
                else:
                    w.writerow((k, _fmt(z[0]), _fmt(z[1])))

    _atomic_write(path, write)


def write_lambda_log(results, path):
    """Per-frame clutter estimates; ``n_clutter_gen`` is ``nan`` in fixed-clutter mode."""

    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LAMBDA_HEADER)
        for r in results:
            w.writerow((r.frame, _fmt(r.clutter.lambda_hat), _fmt(r.clutter.n_clutter_gen),
                        _fmt(r.lambda_used)))

    _atomic_write(path, write)


def write_table(path, header, rows):
    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)

    _atomic_write(path, write)


def write_json(path, data):
    _atomic_write(path, lambda fh: fh.write(json.dumps(data, indent=2, sort_keys=True) + "\n"))
