"""Time each compiled kernel against its numpy fallback.

    python benchmarks/bench_kernels.py [--particles 100000] [--meas 10] [--repeat 7]

Reported numbers are the best of ``--repeat`` timings, in milliseconds. The
``rmb frame`` row runs one full clutter-filter step in a subprocess for each
backend, so it includes everything around the kernels.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from boosted_glmb import kernels as K

FRAME_SNIPPET = """
import timeit, numpy as np
from boosted_glmb.config import load_config
from boosted_glmb.pipeline import clutter_step, make_rng
from boosted_glmb.rmb import RmbState
from boosted_glmb.sim import default_config_path
cfg = load_config(default_config_path())
rng = make_rng(0)
rmb = RmbState.empty(5)
frames = [cfg.models.sensor.sample_clutter(rng.poisson({lam}), rng) for _ in range(60)]
for Z in frames[:50]:
    rmb, _ = clutter_step(rmb, Z, cfg, rng)
it = iter(frames[50:] * 1000)
state = [rmb]
def step():
    state[0], _ = clutter_step(state[0], next(it), cfg, rng)
print(min(timeit.repeat(step, number=1, repeat={repeat})) * 1e3)
"""


def _best(fn, repeat):
    fn()  # compile / warm up
    number = 3
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number * 1e3


def _cases(P, m, rng):
    X = rng.normal(0, 300, (P, 5))
    X[:, 4] = rng.normal(0, 0.02, P)
    noise = rng.standard_normal((P, 3))
    Z = np.column_stack([rng.uniform(-np.pi, np.pi, m), rng.uniform(0, 1500, m)])
    n_comp = max(1, P // 1000)
    offsets = np.arange(n_comp + 1, dtype=np.int64) * (P // n_comp)
    P = int(offsets[-1])
    u = (rng.random(P) < 0.1).astype(np.int8)
    w = np.full(P, 1.0 / (P // n_comp))
    r = rng.uniform(0.001, 0.9, n_comp)
    Gt = rng.random((int(u.sum()), m))
    flat = rng.standard_normal(3 * P)
    xo, wo = np.empty((P, 5)), np.empty(P)
    keep = np.arange(n_comp, dtype=np.int64)
    C = rng.random((30, 40))
    L = -np.abs(rng.normal(0, 400, (P // 10, m)))
    return {
        "ct_step": lambda f: f(X[:P], 1.0, noise[:P]),
        "bearing_range_loglik": lambda f: f(X[:P // 10], Z, 0.0, 0.0, 0.035, 10.0),
        "scaled_exp": lambda f: f(L, 0.98),
        "rmb_measurement": lambda f: f(offsets, w, u, Gt, 0.5, 0.98, 1e-4, r, 1000, rng.random(m)),
        "rmb_predict_ct_rw": lambda f: f(X[:P], u, w, offsets, 0.9, 0.99, 1.0, 5.0, 0.017, 10.0,
                                         flat, xo, wo),
        "segment_systematic": lambda f: f(w, offsets, keep, rng.random(n_comp), 1000),
        "lsap 30x40": lambda f: f(C),
    }


PAIRS = {
    "ct_step": (K._ct_step_nb, K._ct_step_np),
    "bearing_range_loglik": (K._bearing_range_loglik_nb, K._bearing_range_loglik_np),
    "scaled_exp": (K._scaled_exp_nb, K._scaled_exp_np),
    "rmb_measurement": (K._rmb_measurement_nb, K._rmb_measurement_np),
    "rmb_predict_ct_rw": (K._rmb_predict_ct_rw_nb, K._rmb_predict_ct_rw_np),
    "segment_systematic": (K._segment_systematic_nb, K._segment_systematic_np),
    "lsap 30x40": (K._lsap_nb, K._lsap_np),
}


def frame_time(backend_off, lam, repeat):
    env = dict(os.environ)
    if backend_off:
        env["BOOSTED_GLMB_NO_NUMBA"] = "1"
    else:
        env.pop("BOOSTED_GLMB_NO_NUMBA", None)
    out = subprocess.run([sys.executable, "-c", FRAME_SNIPPET.format(lam=lam, repeat=repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--particles", type=int, default=100_000)
    ap.add_argument("--meas", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=7)
    ap.add_argument("--skip-frame", action="store_true", help="skip the full-step comparison")
    args = ap.parse_args(argv)
    if not K.HAVE_NUMBA:
        sys.exit("numba is unavailable or disabled; nothing to compare")

    rng = np.random.default_rng(0)
    cases = _cases(args.particles, args.meas, rng)
    print(f"{'kernel':<22}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}")
    for name, (nb, np_) in PAIRS.items():
        run = cases[name]
        a = _best(lambda: run(nb), args.repeat)
        b = _best(lambda: run(np_), args.repeat)
        print(f"{name:<22}{a:>10.3f}{b:>10.3f}{b / a:>8.1f}x")
    if not args.skip_frame:
        a = frame_time(False, args.meas, args.repeat)
        b = frame_time(True, args.meas, max(3, args.repeat // 2))
        print(f"{'rmb frame':<22}{a:>10.3f}{b:>10.3f}{b / a:>8.1f}x")


if __name__ == "__main__":
    main()
