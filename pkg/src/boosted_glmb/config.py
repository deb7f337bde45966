"""Tracker configuration: dataclasses plus a strict YAML loader.

Unknown keys anywhere in the file raise ``ConfigError``; every omitted key
takes the default declared here.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .glmb import GlmbParams
from .models import (CLUTTER, TARGET, BearingRangeModel, BirthComponent, ConstantVelocityModel,
                     CoordinatedTurnModel, GaussianMixture, LinearPositionModel, ModelError,
                     ModelSet, RandomWalkModel, SurvivalDetectionSpec)
from .rmb import RmbParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ClutterParams:
    lambda_min: float = 0.1
    smoothing_window: int = 10
    fixed_rate: float | None = None

    def __post_init__(self):
        if not self.lambda_min > 0:
            raise ConfigError("lambda_min must be positive")
        if self.smoothing_window < 1:
            raise ConfigError("smoothing_window must be >= 1")
        if self.fixed_rate is not None and self.fixed_rate < 0:
            raise ConfigError("fixed_rate must be >= 0")


def default_births():
    cov = np.diag([50.0, 50.0, 50.0, 50.0, 6 * math.pi / 180]) ** 2
    sites = [(-800.0, -200.0), (-300.0, 800.0), (400.0, -700.0), (800.0, 600.0)]
    return tuple(BirthComponent(0.03, GaussianMixture.single([x, 0.0, y, 0.0, 0.0], cov))
                 for x, y in sites)


@dataclass(frozen=True)
class TrackerConfig:
    models: ModelSet = ModelSet(CoordinatedTurnModel(), BearingRangeModel())
    birth: tuple = field(default_factory=default_births)
    clutter_birth: tuple = (BirthComponent(0.03, None, CLUTTER),
                            BirthComponent(0.03, None, CLUTTER))
    rmb: RmbParams = RmbParams()
    glmb: GlmbParams = GlmbParams()
    clutter: ClutterParams = ClutterParams()
    seed: int = 0

    def __post_init__(self):
        dim = self.models.dim
        for b in self.birth:
            if b.u != TARGET:
                raise ConfigError("target birth entries must have class 1")
            if b.density.means.shape[1] != dim:
                raise ConfigError(f"birth mean has dimension {b.density.means.shape[1]}, "
                                  f"motion model needs {dim}")
        for b in self.clutter_birth:
            if b.u != CLUTTER:
                raise ConfigError("clutter birth entries must have class 0")

    @property
    def rmb_birth(self):
        return tuple(self.birth) + tuple(self.clutter_birth)

    def with_fixed_clutter(self, rate):
        return dataclasses.replace(self, clutter=dataclasses.replace(self.clutter, fixed_rate=rate))

    def with_seed(self, seed):
        return dataclasses.replace(self, seed=int(seed))

    def to_dict(self):
        return config_to_dict(self)

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


# ---------------------------------------------------------------------------
# dict <-> config
# ---------------------------------------------------------------------------

def _take(section, data, allowed, where):
    data = dict(data or {})
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")
    return data


def _fields(cls):
    return [f.name for f in dataclasses.fields(cls)]


def _build_flat(cls, data, where):
    data = _take(where, data, _fields(cls), where)
    try:
        return cls(**data)
    except (TypeError, ModelError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _motion(data):
    data = dict(data or {})
    kind = data.pop("model", "ct")
    if kind == "ct":
        return _build_flat(CoordinatedTurnModel, data, "motion")
    if kind == "cv":
        return _build_flat(ConstantVelocityModel, data, "motion")
    raise ConfigError(f"motion.model must be 'ct' or 'cv', got {kind!r}")


def _sensor(data, dim):
    data = dict(data or {})
    kind = data.pop("model", "bearing_range")
    if kind == "bearing_range":
        if "origin" in data:
            data["origin"] = tuple(data["origin"])
        return _build_flat(BearingRangeModel, data, "sensor")
    if kind == "linear_position":
        data = _take("sensor", data, ["Sigma", "region"], "sensor")
        if "Sigma" in data:
            data["Sigma"] = np.asarray(data["Sigma"], dtype=float)
        if "region" in data:
            data["region"] = tuple(data["region"])
        try:
            return LinearPositionModel(dim=dim, **data)
        except ModelError as exc:
            raise ConfigError(f"sensor: {exc}") from None
    raise ConfigError(f"sensor.model must be 'bearing_range' or 'linear_position', got {kind!r}")


def _gaussian(entry, where):
    entry = _take(where, entry, ["weight", "mean", "std", "cov"], where)
    mean = np.asarray(entry["mean"], dtype=float)
    if "cov" in entry:
        cov = np.asarray(entry["cov"], dtype=float)
    elif "std" in entry:
        cov = np.diag(np.asarray(entry["std"], dtype=float) ** 2)
    else:
        raise ConfigError(f"{where}: needs 'std' or 'cov'")
    return float(entry.get("weight", 1.0)), mean, cov


def _birth(items):
    out = []
    for i, item in enumerate(items or []):
        where = f"birth[{i}]"
        item = dict(item)
        if "r" not in item:
            raise ConfigError(f"{where}: missing 'r'")
        r = float(item.pop("r"))
        if "components" in item:
            item = _take(where, item, ["components"], where)
            parts = [_gaussian(c, f"{where}.components[{k}]")
                     for k, c in enumerate(item["components"])]
        else:
            parts = [_gaussian(item, where)]
        w = np.array([p[0] for p in parts])
        gm = GaussianMixture(w / w.sum(), np.array([p[1] for p in parts]),
                             np.array([p[2] for p in parts]))
        try:
            out.append(BirthComponent(r, gm, TARGET))
        except ModelError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    return tuple(out)


def config_from_dict(data):
    data = _take("config", data, ["seed", "motion", "clutter_motion", "sensor", "probabilities",
                                  "birth", "clutter_birth", "rmb", "glmb", "clutter"], "config")
    motion = _motion(data.get("motion"))
    models = ModelSet(
        motion=motion,
        sensor=_sensor(data.get("sensor"), motion.dim),
        clutter_motion=_build_flat(RandomWalkModel, data.get("clutter_motion"), "clutter_motion"),
        probs=_build_flat(SurvivalDetectionSpec, data.get("probabilities"), "probabilities"),
    )
    kwargs = {"models": models}
    if "birth" in data:
        kwargs["birth"] = _birth(data["birth"])
    if "clutter_birth" in data:
        cb = _take("clutter_birth", data["clutter_birth"], ["count", "r"], "clutter_birth")
        count, r = int(cb.get("count", 2)), float(cb.get("r", 0.03))
        kwargs["clutter_birth"] = tuple(BirthComponent(r, None, CLUTTER) for _ in range(count))
    kwargs["rmb"] = _build_flat(RmbParams, data.get("rmb"), "rmb")
    kwargs["glmb"] = _build_flat(GlmbParams, data.get("glmb"), "glmb")
    kwargs["clutter"] = _build_flat(ClutterParams, data.get("clutter"), "clutter")
    kwargs["seed"] = int(data.get("seed", 0))
    return TrackerConfig(**kwargs)


def load_config(path):
    try:
        data = yaml.safe_load(Path(path).read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(data)


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return [_plain(v) for v in obj]
    return obj


def _section(obj, **extra):
    out = {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    out.update(extra)
    return out


def config_to_dict(cfg: TrackerConfig):
    m = cfg.models
    motion = _section(m.motion, model="ct" if isinstance(m.motion, CoordinatedTurnModel) else "cv")
    if isinstance(m.sensor, BearingRangeModel):
        sensor = _section(m.sensor, model="bearing_range")
    else:
        sensor = {"model": "linear_position", "Sigma": m.sensor.Sigma.tolist(),
                  "region": list(m.sensor.region)}
    birth = []
    for b in cfg.birth:
        gm = b.density
        birth.append({"r": b.r, "components": [
            {"weight": float(w), "mean": mu.tolist(), "cov": P.tolist()}
            for w, mu, P in zip(gm.weights, gm.means, gm.covs)]})
    cb = cfg.clutter_birth
    return {
        "seed": cfg.seed,
        "motion": motion,
        "clutter_motion": _section(m.clutter_motion),
        "sensor": sensor,
        "probabilities": _section(m.probs),
        "birth": birth,
        "clutter_birth": {"count": len(cb), "r": cb[0].r if cb else 0.03},
        "rmb": _section(cfg.rmb),
        "glmb": _section(cfg.glmb),
        "clutter": _section(cfg.clutter),
    }
