"""Synthetic scenarios: scripted CT targets, Poisson clutter, bearing-range or position sensing."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .config import ConfigError, _motion, _sensor, _take
from .models import BearingRangeModel, CoordinatedTurnModel

SCENARIO_VERSION = 1


@dataclass(frozen=True)
class TargetScript:
    birth: int
    death: int
    state: tuple


@dataclass(frozen=True)
class ScenarioSpec:
    duration: int
    targets: tuple
    clutter: tuple = ((1, 10.0),)  # (start_frame, rate) steps
    motion: object = CoordinatedTurnModel()
    sensor: object = BearingRangeModel()
    p_D: float = 0.98
    p_S: float = 0.99
    seed: int = 0

    def __post_init__(self):
        if self.duration < 1:
            raise ConfigError("duration must be >= 1")
        for t in self.targets:
            if not (1 <= t.birth < t.death <= self.duration + 1):
                raise ConfigError(f"bad target script birth={t.birth} death={t.death}")
            if len(t.state) != self.motion.dim:
                raise ConfigError("target state does not match the motion model")
        if any(rate < 0 for _, rate in self.clutter):
            raise ConfigError("clutter rate must be >= 0")
        if not 0 <= self.p_D <= 1:
            raise ConfigError("p_D must lie in [0, 1]")

    def clutter_rate(self, frame):
        rate = 0.0
        for start, lam in sorted(self.clutter):
            if frame >= start:
                rate = lam
        return rate

    def with_clutter(self, rate):
        from dataclasses import replace
        return replace(self, clutter=((1, float(rate)),))

    def with_seed(self, seed):
        from dataclasses import replace
        return replace(self, seed=int(seed))


@dataclass(frozen=True)
class GroundTruth:
    frames: tuple  # per frame: tuple of (label, state)
    clutter_counts: tuple

    def tracks(self):
        from .pipeline import Track
        out = {}
        for k, objs in enumerate(self.frames, start=1):
            for label, x in objs:
                out.setdefault(label, Track(label)).append(k, x)
        return [out[k] for k in sorted(out)]

    def positions(self, frame):
        objs = self.frames[frame - 1]
        return np.array([[x[0], x[2]] for _, x in objs]).reshape(-1, 2)


def generate_truth(spec: ScenarioSpec, rng):
    states = {}
    frames = []
    for k in range(1, spec.duration + 1):
        objs = []
        for i, t in enumerate(spec.targets):
            if k == t.birth:
                states[i] = np.asarray(t.state, dtype=float)
            elif t.birth < k < t.death:
                states[i] = spec.motion.sample(states[i][None, :], rng)[0]
            if t.birth <= k < t.death:
                objs.append((str(i), states[i].copy()))
        frames.append(tuple(objs))
    counts = tuple(int(rng.poisson(spec.clutter_rate(k))) for k in range(1, spec.duration + 1))
    return GroundTruth(tuple(frames), counts)


def generate_measurements(truth: GroundTruth, spec: ScenarioSpec, rng):
    sensor = spec.sensor
    out = []
    for k, objs in enumerate(truth.frames, start=1):
        rows = []
        for _, x in objs:
            if rng.random() < spec.p_D:
                rows.append(sensor.sample(x, rng))
        Z = np.array(rows).reshape(-1, 2)
        Z = Z[sensor.contains(Z)] if len(Z) else Z
        C = sensor.sample_clutter(truth.clutter_counts[k - 1], rng)
        Z = np.vstack([Z, C])
        out.append(Z[rng.permutation(len(Z))])
    return out


def simulate(spec: ScenarioSpec, seed=None):
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    truth = generate_truth(spec, rng)
    return truth, generate_measurements(truth, spec, rng)


def scenario_from_dict(data):
    data = _take("scenario", data, ["version", "duration", "seed", "motion", "sensor", "p_D", "p_S",
                                    "clutter", "targets"], "scenario")
    version = data.get("version", SCENARIO_VERSION)
    if version != SCENARIO_VERSION:
        raise ConfigError(f"unsupported scenario version {version}")
    motion = _motion(data.get("motion"))
    sensor = _sensor(data.get("sensor"), motion.dim)
    clutter = data.get("clutter", 10.0)
    if isinstance(clutter, (int, float)):
        clutter = ((1, float(clutter)),)
    else:
        clutter = tuple((int(s), float(r)) for s, r in clutter)
    targets = []
    for i, t in enumerate(data.get("targets", [])):
        t = _take(f"targets[{i}]", t, ["birth", "death", "state"], f"targets[{i}]")
        state = tuple(float(v) for v in t["state"])
        targets.append(TargetScript(int(t["birth"]), int(t["death"]), state))
    return ScenarioSpec(
        duration=int(data["duration"]), targets=tuple(targets), clutter=clutter,
        motion=motion, sensor=sensor, p_D=float(data.get("p_D", 0.98)),
        p_S=float(data.get("p_S", 0.99)), seed=int(data.get("seed", 0)))


def load_scenario(path):
    data = yaml.safe_load(Path(path).read_text()) or {}
    return scenario_from_dict(data)


def default_scenario_path():
    return Path(__file__).with_name("data") / "default_scenario.yaml"


def default_config_path():
    return Path(__file__).with_name("data") / "default_config.yaml"
