"""Compare the numba and pure-numpy kernel backends.

Times one log-posterior/gradient evaluation and full LMC / MALA chains at a few
problem sizes, and checks that both backends produce the same chains.

    python3 benchmarks/bench_kernels.py [--iters 2000] [--repeat 5]
"""
import argparse
import logging
import time
import timeit

import numpy as np

from qphase import _kernels
from qphase.model import generate_instance, generate_signal
from qphase.prior import PriorConfig
from qphase.rng import RngState
from qphase.samplers import PhaseRetrievalTarget, SamplerConfig, lmc_run, mala_run

SIZES = [(100, 20), (500, 100), (2000, 100), (4000, 352)]


def _instance(m, p):
    rng = RngState(7, stream_id=m)
    theta = generate_signal(rng, p, max(1, p // 10))
    return generate_instance(rng, theta, m, 1.0)


def bench_grad(inst, repeat):
    tgt = PhaseRetrievalTarget(inst, PriorConfig(0.1), 4 * inst.m)
    theta = np.random.default_rng(0).standard_normal(inst.p) / np.sqrt(inst.p)
    out = {}
    for b in ("numba", "numpy"):
        f, data = tgt.kernel(b), tgt.data
        f(theta, data)  # compile / warm
        n = max(1, int(2e7 // (inst.m * inst.p)))
        out[b] = min(timeit.repeat(lambda: f(theta, data), number=n, repeat=repeat)) / n
    lp_a, g_a = tgt.kernel("numba")(theta, tgt.data)
    lp_b, g_b = tgt.kernel("numpy")(theta, tgt.data)
    err = max(abs(lp_a - lp_b) / abs(lp_b), float(np.max(np.abs(g_a - g_b)) / np.max(np.abs(g_b))))
    return out, err


def bench_chain(inst, run, iters):
    cfg = SamplerConfig(lam=4.0 * inst.m, n_iter=iters, burn_in=iters // 4)
    prior = PriorConfig(0.1)
    out, chains = {}, {}
    for b in ("numba", "numpy"):
        run(inst, prior, SamplerConfig(lam=cfg.lam, n_iter=10, burn_in=0), backend=b)  # warm
        t0 = time.perf_counter()
        chains[b] = run(inst, prior, cfg, backend=b)
        out[b] = time.perf_counter() - t0
    diff = float(np.max(np.abs(chains["numba"].posterior_mean - chains["numpy"].posterior_mean)))
    return out, diff


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--iters", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    logging.getLogger("qphase").setLevel(logging.ERROR)
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")

    print(f"{'m':>5} {'p':>4} | {'grad numba':>11} {'grad numpy':>11} {'x':>5} {'rel err':>8} | "
          f"{'lmc x':>6} {'mala x':>6} {'max |dmean|':>11}")
    for m, p in SIZES:
        inst = _instance(m, p)
        g, err = bench_grad(inst, args.repeat)
        lt, ld = bench_chain(inst, lmc_run, args.iters)
        mt, md = bench_chain(inst, mala_run, args.iters)
        print(f"{m:5d} {p:4d} | {g['numba'] * 1e6:9.1f}us {g['numpy'] * 1e6:9.1f}us "
              f"{g['numpy'] / g['numba']:5.2f} {err:8.1e} | "
              f"{lt['numpy'] / lt['numba']:6.2f} {mt['numpy'] / mt['numba']:6.2f} {max(ld, md):11.2e}")


if __name__ == "__main__":
    main()
