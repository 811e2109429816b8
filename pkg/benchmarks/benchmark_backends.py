"""Time the compiled backend against the pure-Python fallback.

Runs the four hot paths (dense draws, constrained exact draws, fixed-point
draws, chain driving, gap resampling) through both implementations with
identical streams and prints a speedup table.

Usage: python benchmarks/benchmark_backends.py [--scale N]
"""
import argparse
import time

import numpy as np

from gwcheck import _pycore, ptest
from gwcheck.graphs import benchmark_graphs
from gwcheck.gwishart import (
    GWishartParams,
    build_claimed_prep,
    build_clique_prep,
    build_exact_prep,
)
from gwcheck.matrix import cholesky
from gwcheck.rng import substream

try:
    from gwcheck import _core
except ImportError:
    _core = None


def streams(seed, n):
    return [substream(seed, i).generator for i in range(1, n + 1)]


def timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return time.perf_counter() - t0, out


def bench_case(name, call_compiled, call_python):
    tc = tp = float("nan")
    if _core is not None:
        tc, _ = call_compiled()
    tp, _ = call_python()
    speedup = tp / tc if tc == tc else float("nan")
    print(f"{name:<28} compiled {tc:8.3f}s   python {tp:8.3f}s   speedup {speedup:6.1f}x")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--scale", type=int, default=2000,
                    help="batch size for the draw benchmarks (default 2000)")
    args = ap.parse_args()
    n = args.scale

    if _core is None:
        print("compiled backend unavailable; timing python fallback only")

    g = benchmark_graphs()
    params_c = GWishartParams(delta=10.0, d=np.eye(10), graph=g["c"])
    params_d = GWishartParams(delta=10.0, d=np.eye(10), graph=g["d"])
    chol_d = cholesky(params_c.d)

    bench_case(
        f"wishart p=10 n={n}",
        lambda: timed(_core.wishart_batch, 19.0, chol_d, n, streams(1, n)),
        lambda: timed(_pycore.wishart_batch, 19.0, chol_d, n, streams(1, n)),
    )

    exact_prep = build_exact_prep(params_c)
    bench_case(
        f"exact graph c n={n}",
        lambda: timed(_core.exact_batch, exact_prep, n, streams(2, n)),
        lambda: timed(_pycore.exact_batch, exact_prep, n, streams(2, n)),
    )

    claimed_prep = build_claimed_prep(params_d)
    bench_case(
        f"claimed graph d n={n}",
        lambda: timed(_core.claimed_batch, claimed_prep, n, streams(3, n)),
        lambda: timed(_pycore.claimed_batch, claimed_prep, n, streams(3, n)),
    )

    codes = ptest.summary_codes([ptest.make_summary("logdet")])
    clique_prep = build_clique_prep(params_c)

    def chains(mod):
        gens = streams(4, n)
        q0 = mod.exact_batch(exact_prep, n, gens)
        return timed(mod.run_chains, q0, clique_prep, 12, 0, gens, codes, False)

    bench_case(
        f"chains graph c r=12 n={n}",
        lambda: chains(_core),
        lambda: chains(_pycore),
    )

    # one production-sized block; the python fallback materializes (q, s)
    # float64 temporaries, so q here stays at the block cap
    s, q = 10_000, 4096
    gen_t = np.random.default_rng(0)
    t1 = gen_t.standard_normal(s)
    t2 = gen_t.standard_normal(s) + 0.1
    v = (gen_t.random((q, s)) < 0.5).astype(np.uint8)
    sort_idx = np.argsort(np.concatenate([t1, t2]), kind="stable")
    jstar = ptest.quantile_index(0.1, s)
    bench_case(
        f"resample s={s} q={q}",
        lambda: timed(_core.resample_gaps, t1, t2, v, sort_idx, jstar),
        lambda: timed(_pycore.resample_gaps, t1, t2, v, sort_idx, jstar),
    )


if __name__ == "__main__":
    main()
