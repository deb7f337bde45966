"""Multi-object tracking with an online clutter-rate estimate.

A robust multi-Bernoulli filter over a target/clutter-generator state space
estimates the clutter rate each frame; a delta-GLMB tracker consumes it as its
clutter intensity and produces labelled tracks.
"""
from .config import ClutterParams, ConfigError, TrackerConfig, load_config
from .glmb import (GlmbDensity, GlmbParams, Label, extract_estimates, glmb_predict,
                   glmb_update)
from .metrics import MotReport, OspaParams, evaluate_tracks, ospa_distance, ospa_series
from .models import (BearingRangeModel, BirthComponent, ConstantVelocityModel,
                     CoordinatedTurnModel, GaussianMixture, LinearPositionModel, ModelSet,
                     RandomWalkModel, SurvivalDetectionSpec)
from .pipeline import (BoostedGlmbTracker, FrameResult, Track, clutter_step, process_frame,
                       run_clutter_only, run_sequence)
from .rmb import (ClutterEstimate, HybridBernoulli, RmbParams, RmbState, Workspace,
                  estimate_clutter_rate, prune_merge_resample, rmb_predict, rmb_step, rmb_update)
from .sim import ScenarioSpec, TargetScript, load_scenario, simulate

__version__ = "0.1.0"

__all__ = [
    "ClutterParams", "ConfigError", "TrackerConfig", "load_config",
    "GlmbDensity", "GlmbParams", "Label", "extract_estimates", "glmb_predict", "glmb_update",
    "MotReport", "OspaParams", "evaluate_tracks", "ospa_distance", "ospa_series",
    "BearingRangeModel", "BirthComponent", "ConstantVelocityModel", "CoordinatedTurnModel",
    "GaussianMixture", "LinearPositionModel", "ModelSet", "RandomWalkModel",
    "SurvivalDetectionSpec",
    "BoostedGlmbTracker", "FrameResult", "Track", "clutter_step", "process_frame",
    "run_clutter_only", "run_sequence",
    "ClutterEstimate", "HybridBernoulli", "RmbParams", "RmbState", "estimate_clutter_rate",
    "prune_merge_resample", "rmb_predict", "rmb_step", "rmb_update", "Workspace",
    "ScenarioSpec", "TargetScript", "load_scenario", "simulate",
]
