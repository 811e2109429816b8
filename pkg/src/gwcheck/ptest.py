"""Permutation test for exchangeability of (initial draw, chain endpoint).

Row i of the summary table pairs h(Q_i0) with h(Q_ir), where chain i starts
at the i-th sampler draw and runs r steps of a stationarity-preserving
kernel. If the sampler draws from the kernel's stationary law, each row is
exchangeable, so the observed statistic omega* = H(T) is one more member of
the family {H(T^(k))} over random row swaps, and

    p* = (1 + #{k: omega^(k) >= omega*}) / (q + 1)

is a valid p-value. The default pair is h(Q) = ln|Q| and H = absolute gap
between the 0.1 column quantiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import graphs as graphlib
from . import gwishart, matrix as matrixlib, mcmc
from .matrix import NumericalError
from .rng import RESAMPLE_STREAM_ID, as_generator, substream

__all__ = [
    "Summary",
    "QuantileGap",
    "TestReport",
    "summary_logdet",
    "summary_logtrace",
    "summary_element",
    "make_summary",
    "quantile_index",
    "quantile",
    "statistic_quantile_gap",
    "resample_statistics",
    "p_value",
    "run_test",
    "format_report",
]

DEFAULT_QUANTILE_P = 0.1

# rows of Bernoulli swap indicators drawn per batch; bounded so one batch
# stays around 32 MB of uniforms at any s
_RESAMPLE_BLOCK_CAP = 4096
_RESAMPLE_BLOCK_BUDGET = 4_194_304


# ---------------------------------------------------------------------------
# scalar summaries h
# ---------------------------------------------------------------------------

def summary_logdet(q: np.ndarray) -> float:
    """ln det Q via Cholesky; raises NotPositiveDefiniteError off the cone."""
    return matrixlib.logdet(np.asarray(q, dtype=np.float64))


def summary_logtrace(q: np.ndarray) -> float:
    q = np.asarray(q, dtype=np.float64)
    return float(np.log(np.trace(q)))


def summary_element(q: np.ndarray, i: int, j: int) -> float:
    """Entry Q_ij with 1-based indices."""
    q = np.asarray(q)
    p = q.shape[0]
    if not (1 <= i <= p and 1 <= j <= p):
        raise IndexError(f"({i},{j}) out of range for a {p}x{p} matrix")
    return float(q[i - 1, j - 1])


@dataclass(frozen=True)
class Summary:
    """A named scalar summary the chain runners can record natively.

    code 0 = matrix element (i, j 1-based), 1 = ln trace, 2 = ln det.
    """

    name: str
    code: int
    i: int = 0
    j: int = 0

    def __call__(self, q) -> float:
        if self.code == 0:
            return summary_element(q, self.i, self.j)
        if self.code == 1:
            return summary_logtrace(q)
        return summary_logdet(q)

    def code_row(self) -> tuple:
        return (self.code, self.i - 1 if self.code == 0 else 0,
                self.j - 1 if self.code == 0 else 0)


def make_summary(name: str) -> Summary:
    """Parse a summary name: 'logdet', 'logtrace', or 'element_i_j'."""
    if name == "logdet":
        return Summary(name="logdet", code=2)
    if name == "logtrace":
        return Summary(name="logtrace", code=1)
    if name.startswith("element_"):
        parts = name.split("_")
        if len(parts) == 3:
            try:
                i, j = int(parts[1]), int(parts[2])
            except ValueError:
                raise ValueError(f"bad summary name: {name!r}") from None
            if i < 1 or j < 1:
                raise ValueError(f"bad summary name: {name!r}")
            return Summary(name=name, code=0, i=i, j=j)
    raise ValueError(
        f"bad summary name: {name!r} (expected 'logdet', 'logtrace', or 'element_i_j')"
    )


def summary_codes(summaries) -> np.ndarray:
    """(n, 3) int64 code rows for a list of Summary objects."""
    return np.ascontiguousarray(
        [s.code_row() for s in summaries], dtype=np.int64
    ).reshape(len(list(summaries)), 3)


# ---------------------------------------------------------------------------
# empirical quantile and the gap statistic H
# ---------------------------------------------------------------------------

def quantile_index(p: float, s: int) -> int:
    """1-based index ceil(p*s) into the ascending order statistics.

    The tiny back-off keeps products like 0.1 * 10000 (= 1000.0000000000001
    in floats) from spilling into the next order statistic; it only matters
    when p*s sits within 1e-9 of an integer.
    """
    if s < 1:
        raise ValueError("need at least one value")
    k = math.ceil(p * s - 1e-9)
    return min(max(k, 1), s)


def quantile(values, p: float) -> float:
    """Lower empirical p-quantile: ascending order statistic ceil(p*s)."""
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError("empty input")
    k = quantile_index(p, arr.size)
    return float(np.partition(arr, k - 1)[k - 1])


def statistic_quantile_gap(t: np.ndarray, p: float = DEFAULT_QUANTILE_P) -> float:
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 2 or t.shape[1] != 2:
        raise ValueError("summary table must be s x 2")
    return abs(quantile(t[:, 0], p) - quantile(t[:, 1], p))


@dataclass(frozen=True)
class QuantileGap:
    """H(T) = |Quantile(col1, p) - Quantile(col2, p)|."""

    p: float = DEFAULT_QUANTILE_P

    @property
    def name(self) -> str:
        return f"quantile_gap_{self.p:g}"

    def __call__(self, t: np.ndarray) -> float:
        return statistic_quantile_gap(t, self.p)


# ---------------------------------------------------------------------------
# resampling and the p-value
# ---------------------------------------------------------------------------

def resample_statistics(t: np.ndarray, stat, q: int, rng) -> np.ndarray:
    """q values of stat over independent row-swap copies of t.

    Swap indicators are fair Bernoullis; v=1 keeps row order, v=0 swaps.
    They are consumed as uniform blocks, resample-major then row-major, so
    the stream contract is independent of internal blocking. QuantileGap
    statistics take a selection-only fast path through the backend; it
    produces bit-identical values to the generic path.
    """
    from . import backend

    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 2 or t.shape[1] != 2:
        raise ValueError("summary table must be s x 2")
    if q < 1:
        raise ValueError("q must be >= 1")
    gen = as_generator(rng)
    s = t.shape[0]
    t1 = np.ascontiguousarray(t[:, 0])
    t2 = np.ascontiguousarray(t[:, 1])
    fast = isinstance(stat, QuantileGap)
    if fast:
        pooled = np.concatenate([t1, t2])
        sort_idx = np.argsort(pooled, kind="stable")
        jstar = quantile_index(stat.p, s)

    out = np.empty(q)
    block = min(_RESAMPLE_BLOCK_CAP, max(1, _RESAMPLE_BLOCK_BUDGET // s))
    done = 0
    while done < q:
        b = min(block, q - done)
        v = gen.random((b, s)) < 0.5
        if fast:
            out[done:done + b] = backend.resample_gaps(
                t1, t2, v.view(np.uint8), sort_idx, jstar
            )
        else:
            keep = v
            col1 = np.where(keep, t1, t2)
            col2 = np.where(keep, t2, t1)
            for bi in range(b):
                out[done + bi] = stat(np.column_stack((col1[bi], col2[bi])))
        done += b
    return out


def p_value(omega_star: float, omega_resampled) -> float:
    """(1 + #{k: omega^(k) >= omega*}) / (q + 1); ties count as exceedances."""
    omegas = np.asarray(omega_resampled, dtype=np.float64).ravel()
    if omegas.size < 1:
        raise ValueError("need at least one resampled statistic")
    exceed = int(np.count_nonzero(omegas >= omega_star))
    return (1 + exceed) / (omegas.size + 1)


# ---------------------------------------------------------------------------
# full test
# ---------------------------------------------------------------------------

@dataclass
class TestReport:
    omega_star: float
    omega_resampled: np.ndarray
    p_value: float
    meta: dict = field(default_factory=dict)


def _is_canonical_composite(kernel, params) -> Optional[str]:
    """'ru' / 'rp' when kernel is the canonical Gibbs composite for params."""
    if isinstance(kernel, mcmc.RandomUpdateKernel):
        kind = "ru"
    elif isinstance(kernel, mcmc.RandomPermutationKernel):
        kind = "rp"
    else:
        return None
    cliques = graphlib.maximal_cliques(params.graph)
    subs = kernel.kernels
    if len(subs) != len(cliques):
        return None
    for sub, c in zip(subs, cliques):
        if not isinstance(sub, mcmc.GibbsCliqueKernel):
            return None
        if sub.clique != c:
            return None
        sp = sub.params
        if sp is not params and not (
            sp.graph == params.graph
            and sp.delta == params.delta
            and np.array_equal(sp.d, params.d)
        ):
            return None
    return kind


def run_test(
    sampler: gwishart.SamplerSpec,
    kernel_builder: Optional[Callable] = None,
    h=None,
    H=None,
    s: int = 10_000,
    r: Optional[int] = None,
    q: int = 999_999,
    master_seed: int = 0,
    graph_label: Optional[str] = None,
) -> TestReport:
    """Draw s times, run s chains r steps, compare columns by permutation.

    Chain i consumes only the stream (master_seed, i); the resampling pass
    consumes stream (master_seed, 0). kernel_builder maps target parameters
    to a transition kernel and defaults to the random-update Gibbs composite;
    r defaults to 3 times the number of maximal cliques.
    """
    params = sampler.params
    if h is None:
        h = make_summary("logdet")
    if H is None:
        H = QuantileGap()
    if s < 1:
        raise ValueError("s must be >= 1")
    if q < 1:
        raise ValueError("q must be >= 1")
    cliques = graphlib.maximal_cliques(params.graph)
    if r is None:
        r = 3 * len(cliques)
    if r < 0:
        raise ValueError("r must be >= 0")

    if kernel_builder is None:
        kernel = mcmc.make_composite("ru", mcmc.gibbs_composite_kernels(params))
    else:
        kernel = kernel_builder(params)
    kind = _is_canonical_composite(kernel, params)

    streams = [substream(master_seed, i) for i in range(1, s + 1)]
    draws, info = sampler.draw_batch(s, streams)

    t = np.empty((s, 2))
    if kind is not None and isinstance(h, Summary):
        codes = summary_codes([h])
        rec = mcmc.run_chains_batch(
            draws, gwishart.build_clique_prep(params), r, kind, streams,
            codes, record_all=False,
        )
        t[:, 0] = rec[:, 0, 0]
        t[:, 1] = rec[:, 1, 0]
    else:
        for i in range(s):
            t[i, 0] = h(draws[i])
            state = draws[i]
            try:
                for _ in range(r):
                    state = kernel.step(state, streams[i])
            except NumericalError as exc:
                raise NumericalError(f"chain {i}: {exc}") from None
            t[i, 1] = h(state)

    omega_star = float(H(t))
    omegas = resample_statistics(
        t, H, q, substream(master_seed, RESAMPLE_STREAM_ID)
    )
    pstar = p_value(omega_star, omegas)

    from . import backend

    meta = {
        "seed": master_seed,
        "s": s,
        "r": r,
        "q": q,
        "graph": graph_label if graph_label is not None
        else f"p{params.graph.p}_edges{len(params.graph.edges)}",
        "sampler": sampler.kind,
        "h_name": h.name if isinstance(h, Summary) else getattr(h, "name", "custom"),
        "H_name": getattr(H, "name", "custom"),
        "kernel": getattr(kernel, "name", "custom"),
        "backend": backend.name,
        "exceedances": int(np.count_nonzero(omegas >= omega_star)),
    }
    if info is not None:
        conv = info["converged"]
        meta["fp_converged"] = int(np.count_nonzero(conv))
        meta["fp_total"] = int(conv.size)
        meta["fp_max_sweeps"] = int(np.max(info["sweeps"]))
        meta["fp_mean_sweeps"] = float(np.mean(info["sweeps"]))
        meta["fp_max_final_change"] = float(np.max(info["final_change"]))
    return TestReport(
        omega_star=omega_star,
        omega_resampled=omegas,
        p_value=pstar,
        meta=meta,
    )


def format_report(report: TestReport) -> str:
    """Flat key=value block; floats at full precision for byte-stable reruns."""
    lines = [
        f"p_value={report.p_value:.17g}",
        f"omega_star={report.omega_star:.17g}",
    ]
    for key, val in report.meta.items():
        if isinstance(val, float):
            lines.append(f"{key}={val:.17g}")
        else:
            lines.append(f"{key}={val}")
    return "\n".join(lines) + "\n"
