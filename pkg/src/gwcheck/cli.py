"""Command-line driver: sampling, trace stats, ECDF dumps, tests, calibration.

All outputs are CSV or flat key=value text; plotting is external. Every file
starts with a '#' manifest line echoing the resolved configuration, and every
result file is byte-identical when rerun with that configuration on the same
backend. manifest.txt additionally records the library version and wall time,
so it is the one file excluded from the byte-exact guarantee.

Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import graphs as graphlib
from . import gwishart, matrix as matrixlib, mcmc, ptest
from ._version import __version__
from .matrix import NumericalError
from .rng import substream

__all__ = ["main", "UsageError"]

PRESETS = {
    "paper": {"s": 10_000, "q": 999_999},
    "desk": {"s": 5_000, "q": 9_999},
}

DEFAULT_DELTA = 10.0
DEFAULT_KERNEL = "ru"
DEFAULT_SUMMARIES = "element_2_4,logtrace,logdet"
CALIBRATE_DEFAULTS = {"s": 500, "q": 999, "runs": 200}


class UsageError(Exception):
    """Bad flags or inputs (maps to CLI exit code 2)."""


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gwcheck",
        description="Exchangeability checks for claimed exact G-Wishart samplers.",
    )
    parser.add_argument("--version", action="version", version=f"gwcheck {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_shared(p, with_sq=True):
        p.add_argument("--graph", default="a",
                       help="benchmark graph name (a, b, c, d) or a graph file path")
        p.add_argument("--sampler", choices=("claimed", "exact"), default="claimed")
        p.add_argument("--delta", type=float, default=None,
                       help=f"shape parameter (default {DEFAULT_DELTA:g})")
        p.add_argument("--d-file", default=None,
                       help="CSV file for the matrix D (default: identity)")
        p.add_argument("--fp-init", choices=("identity", "wishart-zeroed"),
                       default="identity",
                       help="claimed-sampler fixed-point initialization "
                            "(wishart-zeroed can start outside the PD cone "
                            "and occasionally aborts)")
        p.add_argument("--seed", type=int, default=0, help="master seed")
        p.add_argument("--out", default=".", help="output directory")
        if with_sq:
            p.add_argument("--s", type=int, default=None,
                           help="number of independent chains")
            p.add_argument("--r", type=int, default=None,
                           help="chain steps (default: 3 x number of maximal cliques)")
            p.add_argument("--q", type=int, default=None,
                           help="number of permutation resamples")
            p.add_argument("--kernel", choices=("ru", "rp"), default=DEFAULT_KERNEL,
                           help="random-update or random-permutation composite")
            p.add_argument("--preset", choices=("paper", "desk"), default="paper",
                           help="s/q defaults: paper (10000/999999) or desk (5000/9999)")

    p_sample = sub.add_parser("sample", help="write raw sampler draws")
    add_shared(p_sample, with_sq=False)
    p_sample.add_argument("--n", type=int, default=100, help="number of draws")

    p_trace = sub.add_parser("trace", help="per-step summary means and SDs")
    add_shared(p_trace)
    p_trace.add_argument("--summaries", default=DEFAULT_SUMMARIES,
                         help="comma-separated summary names "
                              "(logdet, logtrace, element_i_j)")

    p_ecdf = sub.add_parser("ecdf", help="empirical CDFs at steps 0 and r")
    add_shared(p_ecdf)
    p_ecdf.add_argument("--summaries", default=DEFAULT_SUMMARIES)

    p_test = sub.add_parser("test", help="run the exchangeability test")
    add_shared(p_test)
    p_test.add_argument("--h", dest="h_name", default="logdet",
                        help="summary h (logdet, logtrace, element_i_j)")
    p_test.add_argument("--dump-resamples", default=None, metavar="PATH",
                        help="also dump all resampled statistics to PATH")

    p_cal = sub.add_parser(
        "calibrate",
        help="repeated null runs (defaults: exact sampler, graph a, s=500, q=999)",
    )
    add_shared(p_cal)
    p_cal.add_argument("--runs", type=int, default=CALIBRATE_DEFAULTS["runs"])
    p_cal.set_defaults(sampler="exact")
    return parser


# ---------------------------------------------------------------------------
# config resolution
# ---------------------------------------------------------------------------

def _resolve_graph(arg: str):
    bench = graphlib.benchmark_graphs()
    if arg in bench:
        return bench[arg], arg
    if os.path.exists(arg):
        try:
            return graphlib.load_graph_file(arg), arg
        except ValueError as exc:
            raise UsageError(f"bad graph file {arg}: {exc}") from None
    raise UsageError(f"unknown graph {arg!r}: expected a, b, c, d, or a file path")


def _resolve_params(args):
    graph, label = _resolve_graph(args.graph)
    delta = DEFAULT_DELTA if args.delta is None else args.delta
    if args.d_file is not None:
        try:
            d = matrixlib.load_matrix_file(args.d_file)
        except (OSError, ValueError) as exc:
            raise UsageError(f"bad D file {args.d_file}: {exc}") from None
        d_label = args.d_file
    else:
        d = np.eye(graph.p)
        d_label = "identity"
    try:
        params = gwishart.GWishartParams(delta=delta, d=d, graph=graph)
    except (ValueError, matrixlib.NotPositiveDefiniteError) as exc:
        raise UsageError(f"bad target parameters: {exc}") from None
    if args.sampler == "exact" and not graphlib.is_decomposable(graph):
        raise UsageError(f"graph {label} is not decomposable; "
                         "the exact sampler requires a decomposable graph")
    return params, label, d_label


def _make_sampler(args, params) -> gwishart.SamplerSpec:
    return gwishart.SamplerSpec(kind=args.sampler, params=params, fp_init=args.fp_init)


def _resolve_sq(args, n_cliques: int):
    preset = PRESETS[args.preset]
    s = args.s if args.s is not None else preset["s"]
    r = args.r if args.r is not None else 3 * n_cliques
    q = args.q if args.q is not None else preset["q"]
    if s < 1:
        raise UsageError("--s must be >= 1")
    if r < 0:
        raise UsageError("--r must be >= 0")
    if q < 1:
        raise UsageError("--q must be >= 1")
    return s, r, q


def _resolve_summaries(spec: str, p: int):
    names = [part.strip() for part in spec.split(",") if part.strip()]
    if not names:
        raise UsageError("--summaries is empty")
    out = []
    for name in names:
        try:
            summ = ptest.make_summary(name)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if summ.code == 0 and not (summ.i <= p and summ.j <= p):
            raise UsageError(
                f"summary {name} needs a {max(summ.i, summ.j)}x"
                f"{max(summ.i, summ.j)} matrix but the graph has p={p}"
            )
        out.append(summ)
    return out


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------

def _manifest_line(command: str, pairs) -> str:
    body = " ".join(f"{k}={_fmt(v)}" for k, v in pairs)
    return f"# gwcheck {command} {body}"


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_run_manifest(outdir: str, command: str, pairs, wall: float) -> None:
    lines = [_manifest_line(command, pairs)]
    lines.append(f"command={command}")
    lines.extend(f"{k}={_fmt(v)}" for k, v in pairs)
    lines.append(f"version={__version__}")
    lines.append(f"wall_time_seconds={wall:.3f}")
    _write_text(os.path.join(outdir, "manifest.txt"), "\n".join(lines) + "\n")


def _prepare_outdir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_sample(args) -> int:
    params, label, d_label = _resolve_params(args)
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    sampler = _make_sampler(args, params)
    outdir = _prepare_outdir(args.out)
    from . import backend

    pairs = [
        ("graph", label), ("sampler", args.sampler), ("delta", params.delta),
        ("d", d_label), ("fp_init", args.fp_init), ("n", args.n),
        ("seed", args.seed), ("backend", backend.name),
    ]
    start = time.monotonic()
    streams = [substream(args.seed, i) for i in range(1, args.n + 1)]
    draws, info = sampler.draw_batch(args.n, streams)

    p = params.p
    header = "draw," + ",".join(f"q_{i}_{j}" for i in range(1, p + 1)
                                for j in range(1, p + 1))
    lines = [_manifest_line("sample", pairs), header]
    for k in range(args.n):
        flat = draws[k].ravel()
        lines.append(str(k + 1) + "," + ",".join(f"{v:.17g}" for v in flat))
    _write_text(os.path.join(outdir, "draws.csv"), "\n".join(lines) + "\n")

    if info is not None:
        sweeps = np.asarray(info["sweeps"])
        conv = np.asarray(info["converged"])
        cl = [_manifest_line("sample", pairs)]
        cl.append(f"total={args.n}")
        cl.append(f"converged={int(np.count_nonzero(conv))}")
        cl.append(f"not_converged={int(np.count_nonzero(~conv))}")
        cl.append(f"min_sweeps={int(sweeps.min())}")
        cl.append(f"max_sweeps={int(sweeps.max())}")
        cl.append(f"mean_sweeps={float(sweeps.mean()):.17g}")
        cl.append(f"max_final_change={float(np.max(info['final_change'])):.17g}")
        for value in np.unique(sweeps):
            count = int(np.count_nonzero(sweeps == value))
            cl.append(f"sweeps_{int(value)}={count}")
        _write_text(os.path.join(outdir, "census.txt"), "\n".join(cl) + "\n")
    _write_run_manifest(outdir, "sample", pairs, time.monotonic() - start)
    return 0


def _run_batch(args, params, sampler, s: int, r: int, summaries, record_all: bool):
    """Draws + chains on per-unit streams; returns (s, n_rec, n_h) summaries."""
    streams = [substream(args.seed, i) for i in range(1, s + 1)]
    draws, _ = sampler.draw_batch(s, streams)
    codes = ptest.summary_codes(summaries)
    prep = gwishart.build_clique_prep(params)
    return mcmc.run_chains_batch(draws, prep, r, args.kernel, streams, codes,
                                 record_all=record_all)


def _cmd_trace(args) -> int:
    params, label, d_label = _resolve_params(args)
    summaries = _resolve_summaries(args.summaries, params.p)
    cliques = graphlib.maximal_cliques(params.graph)
    s, r, _ = _resolve_sq(args, len(cliques))
    sampler = _make_sampler(args, params)
    outdir = _prepare_outdir(args.out)
    from . import backend

    pairs = [
        ("graph", label), ("sampler", args.sampler), ("delta", params.delta),
        ("d", d_label), ("fp_init", args.fp_init), ("s", s), ("r", r),
        ("kernel", args.kernel), ("summaries", ",".join(m.name for m in summaries)),
        ("seed", args.seed), ("backend", backend.name),
    ]
    start = time.monotonic()
    rec = _run_batch(args, params, sampler, s, r, summaries, record_all=True)
    lines = [_manifest_line("trace", pairs), "step,summary,mean,sd"]
    for step in range(r + 1):
        for hi, summ in enumerate(summaries):
            vals = rec[:, step, hi]
            mean = float(np.mean(vals))
            sd = float(np.std(vals, ddof=1)) if s > 1 else float("nan")
            lines.append(f"{step},{summ.name},{mean:.17g},{sd:.17g}")
    _write_text(os.path.join(outdir, "trace.csv"), "\n".join(lines) + "\n")
    _write_run_manifest(outdir, "trace", pairs, time.monotonic() - start)
    return 0


def _cmd_ecdf(args) -> int:
    params, label, d_label = _resolve_params(args)
    summaries = _resolve_summaries(args.summaries, params.p)
    cliques = graphlib.maximal_cliques(params.graph)
    s, r, _ = _resolve_sq(args, len(cliques))
    sampler = _make_sampler(args, params)
    outdir = _prepare_outdir(args.out)
    from . import backend

    pairs = [
        ("graph", label), ("sampler", args.sampler), ("delta", params.delta),
        ("d", d_label), ("fp_init", args.fp_init), ("s", s), ("r", r),
        ("kernel", args.kernel), ("summaries", ",".join(m.name for m in summaries)),
        ("seed", args.seed), ("backend", backend.name),
    ]
    start = time.monotonic()
    rec = _run_batch(args, params, sampler, s, r, summaries, record_all=False)
    lines = [_manifest_line("ecdf", pairs), "summary,step,value,ecdf"]
    for hi, summ in enumerate(summaries):
        for rec_idx, step in ((0, 0), (1, r)):
            vals = np.sort(rec[:, rec_idx, hi])
            for rank, v in enumerate(vals, start=1):
                lines.append(f"{summ.name},{step},{v:.17g},{rank / s:.17g}")
    _write_text(os.path.join(outdir, "ecdf.csv"), "\n".join(lines) + "\n")
    _write_run_manifest(outdir, "ecdf", pairs, time.monotonic() - start)
    return 0


def _cmd_test(args) -> int:
    params, label, d_label = _resolve_params(args)
    cliques = graphlib.maximal_cliques(params.graph)
    s, r, q = _resolve_sq(args, len(cliques))
    try:
        h = ptest.make_summary(args.h_name)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if h.code == 0 and not (h.i <= params.p and h.j <= params.p):
        raise UsageError(f"summary {h.name} is out of range for p={params.p}")
    sampler = _make_sampler(args, params)
    outdir = _prepare_outdir(args.out)
    from . import backend

    pairs = [
        ("graph", label), ("sampler", args.sampler), ("delta", params.delta),
        ("d", d_label), ("fp_init", args.fp_init), ("s", s), ("r", r), ("q", q),
        ("kernel", args.kernel), ("h", h.name), ("seed", args.seed),
        ("backend", backend.name),
    ]
    start = time.monotonic()
    report = ptest.run_test(
        sampler,
        kernel_builder=lambda prm: mcmc.make_composite(
            args.kernel, mcmc.gibbs_composite_kernels(prm)),
        h=h,
        H=ptest.QuantileGap(),
        s=s, r=r, q=q,
        master_seed=args.seed,
        graph_label=label,
    )
    text = _manifest_line("test", pairs) + "\n" + ptest.format_report(report)
    _write_text(os.path.join(outdir, "report.txt"), text)
    if args.dump_resamples:
        path = args.dump_resamples
        if not os.path.isabs(path):
            path = os.path.join(outdir, path)
        lines = [_manifest_line("test", pairs), "k,omega"]
        lines.extend(f"{k + 1},{v:.17g}"
                     for k, v in enumerate(report.omega_resampled))
        _write_text(path, "\n".join(lines) + "\n")
    _write_run_manifest(outdir, "test", pairs, time.monotonic() - start)
    print(f"p_value={report.p_value:.17g}")
    return 0


def _cmd_calibrate(args) -> int:
    if args.runs < 1:
        raise UsageError("--runs must be >= 1")
    params, label, d_label = _resolve_params(args)
    cliques = graphlib.maximal_cliques(params.graph)
    s = args.s if args.s is not None else CALIBRATE_DEFAULTS["s"]
    r = args.r if args.r is not None else 3 * len(cliques)
    q = args.q if args.q is not None else CALIBRATE_DEFAULTS["q"]
    if s < 1 or q < 1 or r < 0:
        raise UsageError("bad --s/--r/--q")
    sampler = _make_sampler(args, params)
    outdir = _prepare_outdir(args.out)
    from . import backend

    pairs = [
        ("graph", label), ("sampler", args.sampler), ("delta", params.delta),
        ("d", d_label), ("fp_init", args.fp_init), ("s", s), ("r", r), ("q", q),
        ("kernel", args.kernel), ("runs", args.runs), ("seed", args.seed),
        ("backend", backend.name),
    ]
    start = time.monotonic()
    pvals = np.empty(args.runs)
    lines = [_manifest_line("calibrate", pairs), "run,seed,omega_star,p_value"]
    for j in range(1, args.runs + 1):
        run_seed = args.seed + j
        report = ptest.run_test(
            sampler,
            kernel_builder=lambda prm: mcmc.make_composite(
                args.kernel, mcmc.gibbs_composite_kernels(prm)),
            s=s, r=r, q=q,
            master_seed=run_seed,
            graph_label=label,
        )
        pvals[j - 1] = report.p_value
        lines.append(f"{j},{run_seed},{report.omega_star:.17g},"
                     f"{report.p_value:.17g}")
    _write_text(os.path.join(outdir, "calibrate.csv"), "\n".join(lines) + "\n")

    frac = float(np.mean(pvals <= 0.05))
    bins = np.clip((pvals * 10).astype(int), 0, 9)
    counts = np.bincount(bins, minlength=10)
    expected = args.runs / 10.0
    chisq = float(np.sum((counts - expected) ** 2 / expected))
    import scipy.stats

    crit = float(scipy.stats.chi2.ppf(0.999, 9))
    sl = [_manifest_line("calibrate", pairs)]
    sl.append(f"runs={args.runs}")
    sl.append(f"frac_le_0.05={frac:.17g}")
    sl.append(f"chisq_10bin={chisq:.17g}")
    sl.append(f"chisq_critical_0.001={crit:.17g}")
    sl.append(f"uniformity_rejected={int(chisq > crit)}")
    for b in range(10):
        sl.append(f"bin_{b}={int(counts[b])}")
    _write_text(os.path.join(outdir, "calibrate_summary.txt"), "\n".join(sl) + "\n")
    _write_run_manifest(outdir, "calibrate", pairs, time.monotonic() - start)
    print(f"frac_le_0.05={frac:.17g} chisq_10bin={chisq:.17g}")
    return 0


_COMMANDS = {
    "sample": _cmd_sample,
    "trace": _cmd_trace,
    "ecdf": _cmd_ecdf,
    "test": _cmd_test,
    "calibrate": _cmd_calibrate,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
