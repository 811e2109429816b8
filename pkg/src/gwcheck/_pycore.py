"""Pure-numpy backend: batched draws, chain runner, resampling scan.

Functionally identical to the compiled backend and consumes the random
streams draw for draw in the same order; only floating-point results of the
deterministic linear algebra may differ at rounding level. Loops are at the
Python level, so this backend is the slow fallback.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from . import gwishart
from .matrix import NumericalError

BACKEND_NAME = "python"


def _pick(gens, i):
    return gens[i] if len(gens) > 1 else gens[0]


def wishart_batch(dof, chol_d, n, gens):
    p = chol_d.shape[0]
    out = np.empty((n, p, p))
    for i in range(n):
        out[i] = gwishart._wishart_draw(_pick(gens, i), dof, chol_d)
    return out


def exact_batch(prep, n, gens):
    p = prep.p
    out = np.empty((n, p, p))
    for i in range(n):
        out[i] = gwishart._exact_draw(_pick(gens, i), prep)
    return out


def claimed_batch(prep, n, gens):
    p = prep.p
    out = np.empty((n, p, p))
    sweeps = np.empty(n, dtype=np.int64)
    change = np.empty(n)
    conv = np.empty(n, dtype=np.uint8)
    for i in range(n):
        try:
            q, info = gwishart._claimed_draw(_pick(gens, i), prep)
        except NumericalError as exc:
            raise NumericalError(f"draw {i}: {exc}") from None
        out[i] = q
        sweeps[i] = info.sweeps
        change[i] = info.final_change
        conv[i] = 1 if info.converged else 0
    return out, sweeps, change, conv


def _fisher_yates(gen, m):
    perm = list(range(m))
    for i in range(m - 1, 0, -1):
        j = int(gen.random() * (i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def _gibbs_update(gen, q, c, comp, dof, lcc):
    wstar = gwishart._wishart_draw(gen, dof, lcc)
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
    blk = (blk + blk.T) / 2.0
    q[np.ix_(c, c)] = blk
    try:
        np.linalg.cholesky(q)
    except np.linalg.LinAlgError:
        raise NumericalError("updated state is not PD") from None


def _record(dst, q, codes):
    for h, (code, a, b) in enumerate(codes):
        if code == 0:
            dst[h] = q[a, b]
        elif code == 1:
            dst[h] = np.log(np.trace(q))
        else:
            chol = np.linalg.cholesky(q)
            dst[h] = 2.0 * np.sum(np.log(np.diag(chol)))


def run_chains(q0, prep, r, kernel_code, gens, summary_codes, record_all):
    n, p, _ = q0.shape
    m = prep.m
    codes = [tuple(int(v) for v in row) for row in summary_codes]
    n_h = len(codes)
    cl = [prep.cl_idx[prep.cl_off[k]:prep.cl_off[k + 1]] for k in range(m)]
    co = [prep.co_idx[prep.co_off[k]:prep.co_off[k + 1]] for k in range(m)]
    lcc = [
        prep.chol_dcc_flat[prep.chol_dcc_off[k]:prep.chol_dcc_off[k + 1]]
        .reshape(len(cl[k]), len(cl[k]))
        for k in range(m)
    ]
    out = np.empty((n, r + 1 if record_all else 2, n_h))
    for i in range(n):
        gen = _pick(gens, i)
        q = q0[i].copy()
        try:
            _record(out[i, 0], q, codes)
            for step in range(1, r + 1):
                if kernel_code == 0:
                    k = int(gen.random() * m)
                    _gibbs_update(gen, q, cl[k], co[k], prep.dof[k], lcc[k])
                else:
                    for k in _fisher_yates(gen, m):
                        _gibbs_update(gen, q, cl[k], co[k], prep.dof[k], lcc[k])
                if record_all:
                    _record(out[i, step], q, codes)
            if not record_all:
                _record(out[i, 1], q, codes)
        except (NumericalError, np.linalg.LinAlgError) as exc:
            raise NumericalError(f"chain {i}: {exc}") from None
    return out


def resample_gaps(t1, t2, v, sort_idx, jstar):
    """Quantile-gap statistics for a block of row-swap resamples.

    v is (B, s) with 1 = keep row order, 0 = swap. sort_idx (the pooled sort
    order) is unused here; the signature matches the compiled scan.
    """
    keep = v.astype(bool)
    col1 = np.where(keep, t1, t2)
    col2 = np.where(keep, t2, t1)
    q1 = np.partition(col1, jstar - 1, axis=1)[:, jstar - 1]
    q2 = np.partition(col2, jstar - 1, axis=1)[:, jstar - 1]
    return np.abs(q1 - q2)
