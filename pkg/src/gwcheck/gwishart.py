"""G-Wishart density and samplers.

The target density over symmetric PD matrices Q with zeros at the non-edges
of a graph G is proportional to |Q|^(delta/2 - 1) exp(-tr(QD)/2). This module
holds the density evaluation, the complete-graph Wishart sampler (Bartlett
construction), the exact recursive sampler for decomposable graphs, the
claimed fixed-point sampler under test, and the clique-conditional Gibbs
update. Matrices are plain float64 arrays; pattern membership is an invariant
maintained by construction and checked with matrix.enforce_pattern.

Single draws here are the reference implementations. Batched draws go through
the selected backend (compiled or numpy), which consumes the same random
streams draw for draw; the *Prep dataclasses carry the precomputed arrays the
backends read.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from . import graphs as graphlib
from . import matrix as matrixlib
from .matrix import NumericalError
from .rng import as_generator

__all__ = [
    "GWishartParams",
    "ConvergenceInfo",
    "SamplerSpec",
    "log_density_unnormalized",
    "sample_wishart",
    "sample_exact_decomposable",
    "sample_claimed",
    "gibbs_clique_update",
    "schur_cross_correlation",
    "sample_wishart_batch",
    "sample_exact_batch",
    "sample_claimed_batch",
]

FP_RTOL = 1e-13
FP_MAX_SWEEPS = 10000
PATTERN_ATOL = 1e-9


@dataclass(frozen=True, eq=False)
class GWishartParams:
    """Target parameters: shape delta > 0, PD scale-like matrix D, graph G."""

    delta: float
    d: np.ndarray
    graph: graphlib.Graph

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        d = matrixlib.check_symmetric(self.d).copy()
        if d.shape[0] != self.graph.p:
            raise ValueError(
                f"D is {d.shape[0]}x{d.shape[0]} but graph has {self.graph.p} nodes"
            )
        matrixlib.cholesky(d)
        d.flags.writeable = False
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "delta", float(self.delta))

    @property
    def p(self) -> int:
        return self.graph.p


@dataclass(frozen=True)
class ConvergenceInfo:
    """Fixed-point iteration outcome for one claimed-sampler draw."""

    sweeps: int
    final_change: float
    converged: bool


def log_density_unnormalized(q: np.ndarray, params: GWishartParams) -> float:
    """(delta/2 - 1) ln|Q| - tr(QD)/2; the normalizing constant is excluded.

    Q must respect the graph pattern (off-pattern entries zero up to the
    enforcement tolerance) and be positive definite.
    """
    q = matrixlib.enforce_pattern(q, params.graph, PATTERN_ATOL)
    # tr(QD) = sum(Q * D) for symmetric Q, D
    return float(
        (params.delta / 2.0 - 1.0) * matrixlib.logdet(q)
        - 0.5 * np.sum(q * params.d)
    )


# ---------------------------------------------------------------------------
# complete-graph Wishart (Bartlett construction)
# ---------------------------------------------------------------------------

def _wishart_draw(gen: np.random.Generator, dof: float, chol_d: np.ndarray) -> np.ndarray:
    """One Bartlett draw for density |Q|^((dof-p+1)/2-1) exp(-tr(QD)/2).

    Draw order contract (mirrored by the compiled kernel): p diagonal gammas
    ascending, then the strict lower triangle of normals row by row.
    """
    p = chol_d.shape[0]
    a = np.zeros((p, p))
    for i in range(p):
        a[i, i] = math.sqrt(2.0 * gen.standard_gamma(0.5 * (dof - i)))
    if p > 1:
        a[np.tril_indices(p, -1)] = gen.standard_normal(p * (p - 1) // 2)
    t = scipy.linalg.solve_triangular(chol_d, a, lower=True, trans="T")
    return t @ t.T


def sample_wishart(delta: float, d: np.ndarray, rng) -> np.ndarray:
    """Exact draw for the complete-graph case.

    Under the classical Wishart convention this is W(n, V) with n = delta+p-1
    degrees of freedom and scale V = D^{-1}; for p = 1 the density is a
    gamma(delta/2, d/2) density, which pins the parameter mapping.
    """
    if not delta > 0:
        raise ValueError("delta must be > 0")
    d = matrixlib.check_symmetric(d)
    gen = as_generator(rng)
    chol_d = matrixlib.cholesky(d)
    dof = float(delta) + d.shape[0] - 1
    return _wishart_draw(gen, dof, chol_d)


# ---------------------------------------------------------------------------
# exact recursive sampler for decomposable graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ExactPrep:
    """Per-level constants for the exact sampler, in perfect-ordering labels.

    Level j (1-based, stored at index j-1) draws the new diagonal entry as
    gamma(shape[j-1], rate[j-1]); its lower neighbors sit at
    nbr_idx[nbr_off[j-1]:nbr_off[j]] (0-based positions), with the conditional
    mean coefficient w and the Cholesky factor of the neighbor block of D
    stored flat in the same layout.
    """

    p: int
    perm: np.ndarray        # (p,) int64: position -> original 0-based node
    shape: np.ndarray       # (p,) float64
    rate: np.ndarray        # (p,) float64
    nbr_off: np.ndarray     # (p+1,) int64
    nbr_idx: np.ndarray     # (ne,) int64
    w: np.ndarray           # (ne,) float64
    chol_off: np.ndarray    # (p+1,) int64
    chol_flat: np.ndarray   # float64, row-major lower factors


def build_exact_prep(params: GWishartParams) -> ExactPrep:
    order = graphlib.perfect_ordering(params.graph)
    if order is None:
        raise ValueError("graph is not decomposable")
    p = params.graph.p
    perm = np.array(order, dtype=np.int64) - 1
    d = params.d[np.ix_(perm, perm)]
    pos = {node: k for k, node in enumerate(order)}
    lower_nbrs = [[] for _ in range(p)]
    for (i, j) in params.graph.edges:
        a, b = pos[i], pos[j]
        lower_nbrs[max(a, b)].append(min(a, b))

    shape = np.empty(p)
    rate = np.empty(p)
    shape[0] = params.delta / 2.0
    rate[0] = d[0, 0] / 2.0
    nbr_off = [0, 0]
    nbr_idx: list = []
    w_flat: list = []
    chol_off = [0, 0]
    chol_flat: list = []
    for jj in range(1, p):
        nbrs = sorted(lower_nbrs[jj])
        k = len(nbrs)
        if k:
            dt = d[np.ix_(nbrs, nbrs)]
            d12 = d[nbrs, jj]
            lt = matrixlib.cholesky(dt)
            w = scipy.linalg.cho_solve((lt, True), d12)
            rate_j = (d[jj, jj] - d12 @ w) / 2.0
            nbr_idx.extend(nbrs)
            w_flat.extend(w.tolist())
            chol_flat.extend(lt.ravel().tolist())
        else:
            rate_j = d[jj, jj] / 2.0
        shape[jj] = (params.delta + k) / 2.0
        rate[jj] = rate_j
        nbr_off.append(len(nbr_idx))
        chol_off.append(len(chol_flat))
    return ExactPrep(
        p=p,
        perm=np.ascontiguousarray(perm, dtype=np.int64),
        shape=np.ascontiguousarray(shape),
        rate=np.ascontiguousarray(rate),
        nbr_off=np.ascontiguousarray(nbr_off, dtype=np.int64),
        nbr_idx=np.ascontiguousarray(nbr_idx, dtype=np.int64),
        w=np.ascontiguousarray(w_flat, dtype=np.float64),
        chol_off=np.ascontiguousarray(chol_off, dtype=np.int64),
        chol_flat=np.ascontiguousarray(chol_flat, dtype=np.float64),
    )


def _exact_draw(gen: np.random.Generator, prep: ExactPrep) -> np.ndarray:
    """One exact draw given a prep; see build_exact_prep for the level layout.

    Draw order contract: for levels j = p down to 2, one gamma then the
    level's normals; finally the level-1 gamma.
    """
    p = prep.p
    g = np.empty(p)
    z = np.empty(len(prep.nbr_idx))
    for jj in range(p - 1, 0, -1):
        g[jj] = gen.standard_gamma(prep.shape[jj]) / prep.rate[jj]
        lo, hi = prep.nbr_off[jj], prep.nbr_off[jj + 1]
        if hi > lo:
            z[lo:hi] = gen.standard_normal(hi - lo)
    g[0] = gen.standard_gamma(prep.shape[0]) / prep.rate[0]

    q = np.zeros((p, p))
    q[0, 0] = g[0]
    for jj in range(1, p):
        lo, hi = prep.nbr_off[jj], prep.nbr_off[jj + 1]
        q22 = g[jj]
        if hi > lo:
            k = hi - lo
            nbrs = prep.nbr_idx[lo:hi]
            lt = prep.chol_flat[prep.chol_off[jj]:prep.chol_off[jj + 1]].reshape(k, k)
            zen = scipy.linalg.solve_triangular(lt, z[lo:hi], lower=True, trans="T")
            q12 = -q22 * prep.w[lo:hi] + math.sqrt(q22) * zen
            q[np.ix_(nbrs, nbrs)] += np.outer(q12, q12) / q22
            q[nbrs, jj] = q12
            q[jj, nbrs] = q12
        q[jj, jj] = q22
    out = np.empty((p, p))
    out[np.ix_(prep.perm, prep.perm)] = q
    try:
        matrixlib.cholesky(out)
    except matrixlib.NotPositiveDefiniteError as exc:
        raise NumericalError("assembled exact draw is not positive definite") from exc
    return out


def sample_exact_decomposable(params: GWishartParams, rng) -> np.ndarray:
    """Exact draw from the target law; requires a decomposable graph."""
    return _exact_draw(as_generator(rng), build_exact_prep(params))


# ---------------------------------------------------------------------------
# claimed fixed-point sampler
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ClaimedPrep:
    """Constants for the claimed sampler: full-matrix Wishart factor, pattern
    mask, maximal cliques (canonical order) with complements, stop rule."""

    p: int
    m: int
    dof: float
    chol_d: np.ndarray      # (p,p) float64 lower
    pattern: np.ndarray     # (p,p) uint8, 1 on diagonal and edges
    cl_off: np.ndarray      # (m+1,) int64
    cl_idx: np.ndarray      # int64, 0-based
    co_off: np.ndarray      # (m+1,) int64
    co_idx: np.ndarray      # int64, 0-based
    init_identity: int
    rtol: float
    max_sweeps: int
    atol: float
    graph: graphlib.Graph


def build_claimed_prep(
    params: GWishartParams,
    fp_init: str = "identity",
    rtol: float = FP_RTOL,
    max_sweeps: int = FP_MAX_SWEEPS,
    atol: float = PATTERN_ATOL,
) -> ClaimedPrep:
    if fp_init not in ("wishart-zeroed", "identity"):
        raise ValueError("fp_init must be 'wishart-zeroed' or 'identity'")
    p = params.graph.p
    cliques = graphlib.maximal_cliques(params.graph)
    cl_off = [0]
    cl_idx: list = []
    co_off = [0]
    co_idx: list = []
    for c in cliques:
        inside = [v - 1 for v in c]
        cl_idx.extend(inside)
        cl_off.append(len(cl_idx))
        member = set(inside)
        co_idx.extend(i for i in range(p) if i not in member)
        co_off.append(len(co_idx))
    return ClaimedPrep(
        p=p,
        m=len(cliques),
        dof=float(params.delta) + p - 1,
        chol_d=np.ascontiguousarray(matrixlib.cholesky(params.d)),
        pattern=np.ascontiguousarray(matrixlib.pattern_mask(params.graph), dtype=np.uint8),
        cl_off=np.ascontiguousarray(cl_off, dtype=np.int64),
        cl_idx=np.ascontiguousarray(cl_idx, dtype=np.int64),
        co_off=np.ascontiguousarray(co_off, dtype=np.int64),
        co_idx=np.ascontiguousarray(co_idx, dtype=np.int64),
        init_identity=int(fp_init == "identity"),
        rtol=float(rtol),
        max_sweeps=int(max_sweeps),
        atol=float(atol),
        graph=params.graph,
    )


def _claimed_draw(gen: np.random.Generator, prep: ClaimedPrep):
    """One claimed-sampler draw: Wishart draw, invert, clique fixed-point sweeps.

    Only the initial Wishart draw consumes randomness; the sweeps are
    deterministic. Sweeps run in canonical clique order, updating blocks in
    place; convergence is max-abs change across one full sweep at most
    rtol * (1 + max-abs entry). Hitting max_sweeps returns the last iterate
    with converged=False.

    The fixed point solved for is the unique PD pattern matrix whose inverse
    matches Sigma on every maximal clique block, so the limit does not depend
    on the initial iterate. Starting from the identity (the default) keeps
    every iterate PD; starting from the pattern-masked Wishart draw
    occasionally begins outside the PD cone, and a sweep that then meets a
    non-PD retained block aborts with NumericalError.
    """
    p = prep.p
    qt = _wishart_draw(gen, prep.dof, prep.chol_d)
    sigma = matrixlib.inverse(qt)
    cliques = [prep.cl_idx[prep.cl_off[k]:prep.cl_off[k + 1]] for k in range(prep.m)]
    comps = [prep.co_idx[prep.co_off[k]:prep.co_off[k + 1]] for k in range(prep.m)]
    targets = [matrixlib.inverse(sigma[np.ix_(c, c)]) for c in cliques]

    if prep.init_identity:
        q = np.eye(p)
    else:
        q = np.where(prep.pattern.astype(bool), qt, 0.0)
    sweeps = 0
    change = math.inf
    converged = False
    while sweeps < prep.max_sweeps:
        prev = q.copy()
        for c, comp, tgt in zip(cliques, comps, targets):
            if comp.size:
                s = q[np.ix_(comp, comp)]
                x = q[np.ix_(c, comp)]
                try:
                    ls = np.linalg.cholesky(s)
                except np.linalg.LinAlgError:
                    raise NumericalError(
                        "fixed-point sweep met a non-PD retained block"
                    ) from None
                y = scipy.linalg.solve_triangular(ls, x.T, lower=True)
                blk = tgt + y.T @ y
            else:
                blk = tgt
            q[np.ix_(c, c)] = matrixlib.symmetrize(blk)
            try:
                np.linalg.cholesky(q)
            except np.linalg.LinAlgError:
                raise NumericalError(
                    "fixed-point sweep produced a non-PD iterate"
                ) from None
        sweeps += 1
        change = float(np.max(np.abs(q - prev)))
        if change <= prep.rtol * (1.0 + float(np.max(np.abs(q)))):
            converged = True
            break
    q = matrixlib.enforce_pattern(q, prep.graph, prep.atol)
    return q, ConvergenceInfo(sweeps=sweeps, final_change=change, converged=converged)


def sample_claimed(
    params: GWishartParams,
    rng,
    fp_init: str = "identity",
    rtol: float = FP_RTOL,
    max_sweeps: int = FP_MAX_SWEEPS,
    atol: float = PATTERN_ATOL,
):
    """Draw from the claimed sampler; returns (Q, ConvergenceInfo)."""
    prep = build_claimed_prep(params, fp_init, rtol, max_sweeps, atol)
    return _claimed_draw(as_generator(rng), prep)


# ---------------------------------------------------------------------------
# clique-conditional Gibbs update
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CliquePrep:
    """Per-clique constants for Gibbs chain kernels (canonical clique order)."""

    p: int
    m: int
    delta: float
    cl_off: np.ndarray
    cl_idx: np.ndarray
    co_off: np.ndarray
    co_idx: np.ndarray
    dof: np.ndarray          # (m,) float64: delta + |C_k| - 1
    chol_dcc_off: np.ndarray
    chol_dcc_flat: np.ndarray


def build_clique_prep(params: GWishartParams) -> CliquePrep:
    p = params.graph.p
    cliques = graphlib.maximal_cliques(params.graph)
    cl_off = [0]
    cl_idx: list = []
    co_off = [0]
    co_idx: list = []
    dof = []
    chol_off = [0]
    chol_flat: list = []
    for c in cliques:
        inside = [v - 1 for v in c]
        cl_idx.extend(inside)
        cl_off.append(len(cl_idx))
        member = set(inside)
        co_idx.extend(i for i in range(p) if i not in member)
        co_off.append(len(co_idx))
        dof.append(params.delta + len(inside) - 1)
        lcc = matrixlib.cholesky(params.d[np.ix_(inside, inside)])
        chol_flat.extend(lcc.ravel().tolist())
        chol_off.append(len(chol_flat))
    return CliquePrep(
        p=p,
        m=len(cliques),
        delta=float(params.delta),
        cl_off=np.ascontiguousarray(cl_off, dtype=np.int64),
        cl_idx=np.ascontiguousarray(cl_idx, dtype=np.int64),
        co_off=np.ascontiguousarray(co_off, dtype=np.int64),
        co_idx=np.ascontiguousarray(co_idx, dtype=np.int64),
        dof=np.ascontiguousarray(dof, dtype=np.float64),
        chol_dcc_off=np.ascontiguousarray(chol_off, dtype=np.int64),
        chol_dcc_flat=np.ascontiguousarray(chol_flat, dtype=np.float64),
    )


def gibbs_clique_update(q: np.ndarray, clique, params: GWishartParams, rng) -> np.ndarray:
    """Resample the clique block conditional on the rest; acceptance is unity.

    Draws a fresh Wishart block for the clique's marginal slot and adds the
    correction that keeps the retained blocks fixed:
    Q_{C,C} <- W* + Q_{C,R} Q_{R,R}^{-1} Q_{C,R}^T. Entries outside the
    clique's rows/columns are returned bit-identical.
    """
    nodes = sorted(set(int(v) for v in clique))
    if not graphlib.is_clique(params.graph, nodes):
        raise ValueError(f"{nodes} is not a clique of the pattern graph")
    if not nodes:
        raise ValueError("empty clique")
    gen = as_generator(rng)
    q = np.asarray(q, dtype=np.float64)
    p = params.graph.p
    c = np.array([v - 1 for v in nodes], dtype=np.intp)
    member = set(nodes)
    comp = np.array([i for i in range(p) if i + 1 not in member], dtype=np.intp)
    dcc = params.d[np.ix_(c, c)]
    wstar = _wishart_draw(gen, params.delta + len(c) - 1, matrixlib.cholesky(dcc))
    if comp.size:
        s = q[np.ix_(comp, comp)]
        x = q[np.ix_(c, comp)]
        try:
            ls = np.linalg.cholesky(s)
        except np.linalg.LinAlgError:
            raise NumericalError("retained block is not PD") from None
        y = scipy.linalg.solve_triangular(ls, x.T, lower=True)
        blk = wstar + y.T @ y
    else:
        blk = wstar
    out = q.copy()
    out[np.ix_(c, c)] = matrixlib.symmetrize(blk)
    try:
        np.linalg.cholesky(out)
    except np.linalg.LinAlgError:
        raise NumericalError("updated matrix is not PD") from None
    return out


def schur_cross_correlation(draws: np.ndarray, clique, p: Optional[int] = None) -> float:
    """Max |correlation| between clique-slot Schur entries and cross-block entries.

    For an exact draw the Schur complement of the clique block is independent
    of the retained blocks, so this is ~0 up to Monte Carlo noise; for the
    claimed sampler it is a measurement with no contractual magnitude.
    """
    draws = np.asarray(draws, dtype=np.float64)
    n, dim, _ = draws.shape
    nodes = sorted(set(int(v) for v in clique))
    c = np.array([v - 1 for v in nodes], dtype=np.intp)
    member = set(nodes)
    comp = np.array([i for i in range(dim) if i + 1 not in member], dtype=np.intp)
    if comp.size == 0:
        return 0.0
    qcc = draws[:, c][:, :, c]
    x = draws[:, c][:, :, comp]
    s = draws[:, comp][:, :, comp]
    schur = qcc - x @ np.linalg.inv(s) @ np.transpose(x, (0, 2, 1))
    iu = np.triu_indices(len(c))
    feats_a = schur[:, iu[0], iu[1]].reshape(n, -1)
    feats_b = x.reshape(n, -1)
    a = feats_a - feats_a.mean(axis=0)
    b = feats_b - feats_b.mean(axis=0)
    sa = np.sqrt((a * a).sum(axis=0))
    sb = np.sqrt((b * b).sum(axis=0))
    # constant features (structural zeros in the cross block) carry no
    # dependence information; drop them instead of dividing by zero
    a = a[:, sa > 0]
    b = b[:, sb > 0]
    if a.shape[1] == 0 or b.shape[1] == 0:
        return 0.0
    corr = (a.T @ b) / np.outer(sa[sa > 0], sb[sb > 0])
    return float(np.max(np.abs(corr)))


# ---------------------------------------------------------------------------
# sampler plans and batched entry points
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SamplerSpec:
    """A named sampler bound to fixed target parameters.

    kind 'exact' requires a decomposable graph; kind 'claimed' works on any
    graph and reports per-draw convergence info.
    """

    kind: str
    params: GWishartParams
    fp_init: str = "identity"
    rtol: float = FP_RTOL
    max_sweeps: int = FP_MAX_SWEEPS
    atol: float = PATTERN_ATOL

    def __post_init__(self):
        if self.kind not in ("exact", "claimed"):
            raise ValueError("kind must be 'exact' or 'claimed'")
        if self.kind == "exact" and not graphlib.is_decomposable(self.params.graph):
            raise ValueError("graph is not decomposable")
        if self.fp_init not in ("wishart-zeroed", "identity"):
            raise ValueError("fp_init must be 'wishart-zeroed' or 'identity'")

    def draw_with_info(self, rng):
        """One draw; returns (Q, ConvergenceInfo or None)."""
        if self.kind == "exact":
            return sample_exact_decomposable(self.params, rng), None
        q, info = sample_claimed(
            self.params, rng, self.fp_init, self.rtol, self.max_sweeps, self.atol
        )
        return q, info

    def draw(self, rng) -> np.ndarray:
        return self.draw_with_info(rng)[0]

    def draw_batch(self, n: int, gens):
        """n draws through the active backend; returns (draws, info dict or None).

        gens is one generator-like or a list of n, one per draw; draw i
        consumes only gens[i], so batch and per-draw runs agree stream for
        stream.
        """
        if self.kind == "exact":
            return sample_exact_batch(self.params, n, gens), None
        return sample_claimed_batch(
            self.params, n, gens,
            fp_init=self.fp_init, rtol=self.rtol,
            max_sweeps=self.max_sweeps, atol=self.atol,
        )


def sample_wishart_batch(delta: float, d: np.ndarray, n: int, gens) -> np.ndarray:
    from . import backend

    if not delta > 0:
        raise ValueError("delta must be > 0")
    d = matrixlib.check_symmetric(d)
    chol_d = np.ascontiguousarray(matrixlib.cholesky(d))
    dof = float(delta) + d.shape[0] - 1
    return backend.wishart_batch(dof, chol_d, n, backend.normalize_gens(gens, n))


def sample_exact_batch(params: GWishartParams, n: int, gens) -> np.ndarray:
    from . import backend

    prep = build_exact_prep(params)
    return backend.exact_batch(prep, n, backend.normalize_gens(gens, n))


def sample_claimed_batch(
    params: GWishartParams,
    n: int,
    gens,
    fp_init: str = "identity",
    rtol: float = FP_RTOL,
    max_sweeps: int = FP_MAX_SWEEPS,
    atol: float = PATTERN_ATOL,
):
    """Returns (draws, info) with info arrays 'sweeps', 'final_change', 'converged'."""
    from . import backend

    prep = build_claimed_prep(params, fp_init, rtol, max_sweeps, atol)
    draws, sweeps, final_change, converged = backend.claimed_batch(
        prep, n, backend.normalize_gens(gens, n)
    )
    info = {
        "sweeps": sweeps,
        "final_change": final_change,
        "converged": converged.astype(bool),
    }
    return draws, info
