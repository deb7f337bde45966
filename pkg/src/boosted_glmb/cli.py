"""Command-line entry point: simulate, track, evaluate, sweep.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .io import (DataError, load_detections, load_tracks, write_detections, write_json,
                 write_lambda_log, write_table, write_tracks)
from .metrics import OspaParams, evaluate_tracks, ospa_series
from .models import BearingRangeModel, ModelError
from .pipeline import run_sequence
from .sim import default_config_path, default_scenario_path, load_scenario, simulate

log = logging.getLogger("boosted_glmb")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
MOT_HEADER = ("recall", "precision", "fpf", "gt", "mt", "pt", "ml", "frag", "ids", "mean_ospa")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _detection_format(sensor):
    return "bearing-range-csv" if isinstance(sensor, BearingRangeModel) else "mot-csv"


def _floats(text, n=None, name="value"):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad {name} list {text!r}") from None
    if n is not None and len(vals) != n:
        raise UsageError(f"{name} needs {n} comma-separated numbers, got {text!r}")
    return vals


def cmd_simulate(args):
    spec = load_scenario(args.scenario)
    seed = spec.seed if args.seed is None else args.seed
    truth, detections = simulate(spec, seed)
    out = Path(args.out_dir)
    write_tracks(truth.tracks(), out / "truth.csv")
    write_detections(detections, out / "detections.csv", _detection_format(spec.sensor))
    n = sum(len(Z) for Z in detections)
    print(f"wrote {len(detections)} frames, {n} detections, {len(truth.tracks())} truth tracks "
          f"to {out} (seed {seed})")
    return EXIT_OK


def cmd_track(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.fixed_clutter is not None:
        if args.fixed_clutter < 0:
            raise UsageError("--fixed-clutter must be >= 0")
        cfg = cfg.with_fixed_clutter(args.fixed_clutter)
    fmt = args.format or _detection_format(cfg.models.sensor)
    detections = load_detections(args.detections, fmt)
    tracks, results = run_sequence(detections, cfg)
    out = Path(args.out)
    lam_path = Path(args.lambda_out) if args.lambda_out else out.with_name("lambda.csv")
    write_tracks(tracks, out)
    write_lambda_log(results, lam_path)
    write_json(out.with_name(out.stem + ".run.json"), {
        "config_digest": cfg.digest(), "seed": cfg.seed, "frames": len(detections),
        "detections": str(args.detections), "format": fmt,
        "fixed_clutter": cfg.clutter.fixed_rate, "tracks": len(tracks),
    })
    mean_lam = float(np.mean([r.lambda_used for r in results]))
    print(f"{len(tracks)} tracks over {len(detections)} frames; mean clutter rate used "
          f"{mean_lam:.3f}; wrote {out} and {lam_path}")
    return EXIT_OK


def _frames_of(*track_lists):
    frames = {f for tl in track_lists for t in tl for f in t.frames}
    return range(1, max(frames) + 1) if frames else range(0)


def cmd_evaluate(args):
    p, c = _floats(args.ospa, 2, "--ospa")
    ospa_params = OspaParams(p, c)
    est = load_tracks(args.est)
    gt = load_tracks(args.gt)
    report = evaluate_tracks(est, gt, match_radius=args.match_radius)
    ospa = ospa_series(est, gt, _frames_of(est, gt), ospa_params)
    mean_ospa = float(np.mean(ospa)) if len(ospa) else 0.0
    print(report.table())
    print(f"mean OSPA (p={p:g}, c={c:g}): {mean_ospa:.4f}")
    out = Path(args.out) if args.out else Path(args.est).with_name("metrics.csv")
    write_table(out, MOT_HEADER, [tuple(_cell(v) for v in report.row()) + (_cell(mean_ospa),)])
    return EXIT_OK


def _cell(v):
    return v if isinstance(v, (int, np.integer)) else f"{float(v):.6f}"


def cmd_sweep(args):
    spec = load_scenario(args.scenario)
    cfg = load_config(args.config)
    rates = _floats(args.clutter, name="--clutter")
    if not rates or any(r < 0 for r in rates):
        raise UsageError("--clutter needs non-negative rates")
    if args.runs < 1:
        raise UsageError("--runs must be >= 1")
    base = spec.seed if args.seed is None else args.seed
    rows = []
    for lam in rates:
        s = spec.with_clutter(lam)
        ospa, ospa_known, lam_hat = [], [], []
        for i in range(args.runs):
            truth, Z = simulate(s, base + i)
            gt = truth.tracks()
            c = cfg.with_seed(cfg.seed + i)
            tracks, results = run_sequence(Z, c)
            frames = range(1, len(Z) + 1)
            ospa.append(float(np.mean(ospa_series(tracks, gt, frames))))
            lam_hat.append(float(np.mean([r.clutter.lambda_hat for r in results])))
            if args.baseline:
                known, _ = run_sequence(Z, c.with_fixed_clutter(lam))
                ospa_known.append(float(np.mean(ospa_series(known, gt, frames))))
            log.info("clutter %g run %d: ospa %.3f lambda_hat %.3f", lam, i, ospa[-1], lam_hat[-1])
        row = [f"{lam:g}", args.runs, f"{np.mean(ospa):.6f}", f"{np.std(ospa):.6f}",
               f"{np.mean(lam_hat):.6f}", f"{np.std(lam_hat):.6f}"]
        if args.baseline:
            row += [f"{np.mean(ospa_known):.6f}", f"{np.std(ospa_known):.6f}"]
        rows.append(row)
        print(" ".join(str(v) for v in row))
    header = ["clutter", "runs", "ospa_mean", "ospa_std", "lambda_hat_mean", "lambda_hat_std"]
    if args.baseline:
        header += ["ospa_known_mean", "ospa_known_std"]
    write_table(args.out, header, rows)
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser():
    ap = _Parser(prog="boosted-glmb", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="generate truth and detections from a scenario file")
    s.add_argument("--scenario", default=str(default_scenario_path()))
    s.add_argument("--out-dir", required=True)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("track", help="run the tracker over a detection file")
    t.add_argument("--detections", required=True)
    t.add_argument("--config", default=str(default_config_path()))
    t.add_argument("--out", required=True, help="tracks CSV; lambda.csv goes next to it")
    t.add_argument("--lambda-out")
    t.add_argument("--format", choices=("mot-csv", "bearing-range-csv"),
                   help="detection format (default: from the configured sensor)")
    t.add_argument("--fixed-clutter", type=float, metavar="LAMBDA",
                   help="use a constant clutter rate (plain GLMB baseline)")
    t.add_argument("--seed", type=int)
    t.set_defaults(func=cmd_track)

    e = sub.add_parser("evaluate", help="score estimated tracks against ground truth")
    e.add_argument("--est", required=True)
    e.add_argument("--gt", required=True)
    e.add_argument("--ospa", default="1,100", metavar="P,C")
    e.add_argument("--match-radius", type=float, default=50.0)
    e.add_argument("--out", help="metrics CSV (default: metrics.csv next to --est)")
    e.set_defaults(func=cmd_evaluate)

    w = sub.add_parser("sweep", help="mean OSPA and clutter estimate over clutter rates")
    w.add_argument("--scenario", default=str(default_scenario_path()))
    w.add_argument("--config", default=str(default_config_path()))
    w.add_argument("--clutter", default="5,10,20")
    w.add_argument("--runs", type=int, default=3)
    w.add_argument("--seed", type=int, help="first scenario seed (default: the scenario's)")
    w.add_argument("--baseline", action="store_true",
                   help="also run the GLMB with the true clutter rate")
    w.add_argument("--out", default="sweep.csv")
    w.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"boosted-glmb: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FloatingPointError, np.linalg.LinAlgError) as e:
        print(f"boosted-glmb: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, ConfigError, ModelError, OSError, ValueError) as e:
        print(f"boosted-glmb: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
