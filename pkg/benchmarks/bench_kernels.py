"""Throughput of the compiled and numpy per-shot kernels.

Run with ``python benchmarks/bench_kernels.py [--shots N] [--repeat R]``.
Both backends receive identical inputs; the script also reports the largest
disagreement in the outcome-1 probability as a sanity check.
"""

import argparse
import time

import numpy as np

from qauth._kernels import available_backends, get_backend
from qauth.noise_models import HardwareParams, survival_probs
from qauth.timing import build_schedule


def inputs(n, attacker, seed=0):
    hw = HardwareParams(distance_km=1.0)
    lam = 500
    timing = build_schedule(lam, 1e-6, hw.distance_km, hw)
    reps = -(-n // lam)
    t_user = np.tile(timing.t_store_user, reps)[:n]
    t_server = np.tile(timing.t_store_server, reps)[:n]
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, 4))
    return dict(
        m=rng.integers(0, 2, n, dtype=np.int8), mode=0, t_user=t_user, t_server=t_server,
        survival=survival_probs(t_user, t_server, hw), u_loss=rng.random(n),
        sub_bit=rng.integers(0, 2, n, dtype=np.int8), u_out=rng.random(n),
        tamper=int(attacker), haar=(g[:, :2] + 1j * g[:, 2:]) if attacker else None,
        eve_basis=None, u_eve=None, h_err=hw.h_error_c, cx_err=hw.cx_error,
        czx_err=hw.czx_error, ro_err=hw.readout_error_c, T1=hw.T1, T2=hw.T2)


def bench(fn, kw, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(**kw)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shots", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = available_backends()
    print(f"backends: {', '.join(backends)}; shots per call: {args.shots}")
    for attacker in (False, True):
        kw = inputs(args.shots, attacker)
        results = {}
        for name in backends:
            dt, out = bench(get_backend(name), kw, args.repeat)
            results[name] = (dt, out)
            print(f"  {'attacker' if attacker else 'legitimate':10s} {name:7s} "
                  f"{dt:8.3f} s  {1e6 * dt / args.shots:7.3f} us/shot")
        if len(results) == 2:
            (tc, oc), (tn, on) = results["cython"], results["numpy"]
            print(f"  speedup {tn / tc:5.1f}x  max |dp1| {np.max(np.abs(oc[2] - on[2])):.2e}  "
                  f"outcome mismatches {int(np.sum(oc[0] != on[0]))}")


if __name__ == "__main__":
    main()
