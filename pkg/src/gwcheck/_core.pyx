# cython: language_level=3
"""Compiled kernels: batched sampler draws, Gibbs chain runner, resampling scan.

Random draws go through numpy's C distribution entry points on the caller's
bit generators, so streams match the numpy backend draw for draw. All dense
work is on small row-major float64 blocks with Cholesky-only factorizations.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport INFINITY, fabs, log, sqrt
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (
    random_standard_gamma,
    random_standard_normal,
    random_standard_uniform,
)

from .matrix import NumericalError

cnp.import_array()

BACKEND_NAME = "compiled"

DEF STATUS_OK = 0
DEF STATUS_NOT_PD = -2
DEF STATUS_PATTERN = -3


cdef bitgen_t* _bitgen(object gen) except NULL:
    capsule = gen.bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("invalid BitGenerator capsule")
    return <bitgen_t*> PyCapsule_GetPointer(capsule, "BitGenerator")


# ---------------------------------------------------------------------------
# small dense helpers (row-major, lower-triangular conventions)
# ---------------------------------------------------------------------------

cdef int _chol(double* a, int n) noexcept nogil:
    # in-place lower Cholesky; returns STATUS_NOT_PD on a non-positive pivot
    cdef int i, j, k
    cdef double s
    for i in range(n):
        for j in range(i + 1):
            s = a[i * n + j]
            for k in range(j):
                s -= a[i * n + k] * a[j * n + k]
            if i == j:
                if s <= 0.0:
                    return STATUS_NOT_PD
                a[i * n + i] = sqrt(s)
            else:
                a[i * n + j] = s / a[j * n + j]
    return STATUS_OK


cdef void _solve_lower(const double* l, int n, double* b) noexcept nogil:
    # b <- L^{-1} b
    cdef int i, k
    cdef double s
    for i in range(n):
        s = b[i]
        for k in range(i):
            s -= l[i * n + k] * b[k]
        b[i] = s / l[i * n + i]


cdef void _solve_lower_t(const double* l, int n, double* b) noexcept nogil:
    # b <- L^{-T} b
    cdef int i, k
    cdef double s
    for i in range(n - 1, -1, -1):
        s = b[i]
        for k in range(i + 1, n):
            s -= l[k * n + i] * b[k]
        b[i] = s / l[i * n + i]


cdef int _spd_inverse(const double* a, int n, double* out, double* work) noexcept nogil:
    # out <- a^{-1} via Cholesky; work holds n*n + n doubles
    cdef int i, j
    cdef double s
    cdef double* ch = work
    cdef double* col = work + n * n
    for i in range(n * n):
        ch[i] = a[i]
    if _chol(ch, n):
        return STATUS_NOT_PD
    for j in range(n):
        for i in range(n):
            col[i] = 1.0 if i == j else 0.0
        _solve_lower(ch, n, col)
        _solve_lower_t(ch, n, col)
        for i in range(n):
            out[i * n + j] = col[i]
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.5 * (out[i * n + j] + out[j * n + i])
            out[i * n + j] = s
            out[j * n + i] = s
    return STATUS_OK


cdef void _wishart(bitgen_t* rng, double dof, const double* chol_d, int p,
                   double* a, double* t, double* col, double* out) noexcept nogil:
    # Bartlett draw: p diagonal gammas ascending, then the strict lower
    # triangle of normals row by row; out = (L_D^{-T} A)(L_D^{-T} A)^T
    cdef int i, j, k
    cdef double s
    for i in range(p * p):
        a[i] = 0.0
    for i in range(p):
        a[i * p + i] = sqrt(2.0 * random_standard_gamma(rng, 0.5 * (dof - i)))
    for i in range(1, p):
        for j in range(i):
            a[i * p + j] = random_standard_normal(rng)
    for j in range(p):
        for i in range(p):
            col[i] = a[i * p + j]
        _solve_lower_t(chol_d, p, col)
        for i in range(p):
            t[i * p + j] = col[i]
    for i in range(p):
        for j in range(i, p):
            s = 0.0
            for k in range(p):
                s += t[i * p + k] * t[j * p + k]
            out[i * p + j] = s
            out[j * p + i] = s


cdef void _fisher_yates(bitgen_t* rng, int m, int* perm) noexcept nogil:
    cdef int i, j, tmp
    for i in range(m):
        perm[i] = i
    for i in range(m - 1, 0, -1):
        j = <int>(random_standard_uniform(rng) * (i + 1))
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp


# ---------------------------------------------------------------------------
# exact recursive sampler
# ---------------------------------------------------------------------------

cdef int _exact(bitgen_t* rng, int p,
                const cnp.int64_t* perm, const double* shape, const double* rate,
                const cnp.int64_t* nbr_off, const cnp.int64_t* nbr_idx,
                const double* w, const cnp.int64_t* chol_off, const double* chol_flat,
                double* g, double* z, double* q, double* buf, double* chk,
                double* out) noexcept nogil:
    cdef int jj, k, a, b, t, lo, hi
    cdef double q22, sq
    for jj in range(p - 1, 0, -1):
        g[jj] = random_standard_gamma(rng, shape[jj]) / rate[jj]
        lo = <int> nbr_off[jj]
        hi = <int> nbr_off[jj + 1]
        for t in range(lo, hi):
            z[t] = random_standard_normal(rng)
    g[0] = random_standard_gamma(rng, shape[0]) / rate[0]

    for a in range(p * p):
        q[a] = 0.0
    q[0] = g[0]
    for jj in range(1, p):
        lo = <int> nbr_off[jj]
        hi = <int> nbr_off[jj + 1]
        q22 = g[jj]
        k = hi - lo
        if k > 0:
            for t in range(k):
                buf[t] = z[lo + t]
            _solve_lower_t(chol_flat + chol_off[jj], k, buf)
            sq = sqrt(q22)
            for t in range(k):
                buf[t] = -q22 * w[lo + t] + sq * buf[t]
            for a in range(k):
                for b in range(k):
                    q[nbr_idx[lo + a] * p + nbr_idx[lo + b]] += buf[a] * buf[b] / q22
            for a in range(k):
                q[nbr_idx[lo + a] * p + jj] = buf[a]
                q[jj * p + nbr_idx[lo + a]] = buf[a]
        q[jj * p + jj] = q22
    for a in range(p):
        for b in range(p):
            out[perm[a] * p + perm[b]] = q[a * p + b]
    for a in range(p * p):
        chk[a] = out[a]
    return _chol(chk, p)


# ---------------------------------------------------------------------------
# shared block update: q[C,C] <- base + Q_{C,R} Q_{R,R}^{-1} Q_{C,R}^T
# ---------------------------------------------------------------------------

cdef int _block_update(double* q, int p,
                       const cnp.int64_t* c, int ck,
                       const cnp.int64_t* comp, int rk,
                       const double* base,
                       double* sbuf, double* xrow, double* ybuf,
                       double* chk) noexcept nogil:
    cdef int a, b, t
    cdef double s
    if rk > 0:
        for a in range(rk):
            for b in range(rk):
                sbuf[a * rk + b] = q[comp[a] * p + comp[b]]
        if _chol(sbuf, rk):
            return STATUS_NOT_PD
        for a in range(ck):
            for b in range(rk):
                xrow[b] = q[c[a] * p + comp[b]]
            _solve_lower(sbuf, rk, xrow)
            for b in range(rk):
                ybuf[a * rk + b] = xrow[b]
        for a in range(ck):
            for b in range(a, ck):
                s = base[a * ck + b]
                for t in range(rk):
                    s += ybuf[a * rk + t] * ybuf[b * rk + t]
                q[c[a] * p + c[b]] = s
                q[c[b] * p + c[a]] = s
    else:
        for a in range(ck):
            for b in range(a, ck):
                s = base[a * ck + b]
                q[c[a] * p + c[b]] = s
                q[c[b] * p + c[a]] = s
    for a in range(p * p):
        chk[a] = q[a]
    return _chol(chk, p)


# ---------------------------------------------------------------------------
# claimed fixed-point sampler
# ---------------------------------------------------------------------------

cdef int _claimed(bitgen_t* rng, int p, double dof, const double* chol_d,
                  const unsigned char* pattern, int m,
                  const cnp.int64_t* cl_off, const cnp.int64_t* cl_idx,
                  const cnp.int64_t* co_off, const cnp.int64_t* co_idx,
                  const cnp.int64_t* sq_off,
                  int init_identity, double rtol, long max_sweeps, double atol,
                  double* a, double* t, double* col, double* qt, double* sigma,
                  double* tgt, double* prev, double* sbuf, double* xrow,
                  double* ybuf, double* chk, double* work,
                  double* out, cnp.int64_t* sweeps, double* change,
                  unsigned char* conv) noexcept nogil:
    cdef int i, k, aa, bb, ck, rk, status
    cdef long it
    cdef double ch, qmax, d
    _wishart(rng, dof, chol_d, p, a, t, col, qt)
    if _spd_inverse(qt, p, sigma, work):
        return STATUS_NOT_PD
    for k in range(m):
        ck = <int> (cl_off[k + 1] - cl_off[k])
        for aa in range(ck):
            for bb in range(ck):
                sbuf[aa * ck + bb] = sigma[cl_idx[cl_off[k] + aa] * p
                                           + cl_idx[cl_off[k] + bb]]
        if _spd_inverse(sbuf, ck, tgt + sq_off[k], work):
            return STATUS_NOT_PD

    if init_identity:
        for i in range(p * p):
            out[i] = 0.0
        for i in range(p):
            out[i * p + i] = 1.0
    else:
        for i in range(p * p):
            out[i] = qt[i] if pattern[i] else 0.0

    it = 0
    ch = INFINITY
    cdef bint converged = False
    while it < max_sweeps:
        for i in range(p * p):
            prev[i] = out[i]
        for k in range(m):
            ck = <int> (cl_off[k + 1] - cl_off[k])
            rk = <int> (co_off[k + 1] - co_off[k])
            status = _block_update(out, p, cl_idx + cl_off[k], ck,
                                   co_idx + co_off[k], rk, tgt + sq_off[k],
                                   sbuf, xrow, ybuf, chk)
            if status:
                return status
        it += 1
        ch = 0.0
        qmax = 0.0
        for i in range(p * p):
            d = fabs(out[i] - prev[i])
            if d > ch:
                ch = d
            d = fabs(out[i])
            if d > qmax:
                qmax = d
        if ch <= rtol * (1.0 + qmax):
            converged = True
            break

    for aa in range(p):
        for bb in range(p):
            if not pattern[aa * p + bb]:
                if fabs(out[aa * p + bb]) > atol:
                    return STATUS_PATTERN
                out[aa * p + bb] = 0.0
    sweeps[0] = it
    change[0] = ch
    conv[0] = 1 if converged else 0
    return STATUS_OK


# ---------------------------------------------------------------------------
# Gibbs chain runner
# ---------------------------------------------------------------------------

cdef int _record(const double* q, int p, const cnp.int64_t* codes, int n_h,
                 double* dst, double* chk) noexcept nogil:
    cdef int h, a
    cdef double s
    cdef cnp.int64_t code, i, j
    for h in range(n_h):
        code = codes[3 * h]
        i = codes[3 * h + 1]
        j = codes[3 * h + 2]
        if code == 0:
            dst[h] = q[i * p + j]
        elif code == 1:
            s = 0.0
            for a in range(p):
                s += q[a * p + a]
            dst[h] = log(s)
        else:
            for a in range(p * p):
                chk[a] = q[a]
            if _chol(chk, p):
                return STATUS_NOT_PD
            s = 0.0
            for a in range(p):
                s += log(chk[a * p + a])
            dst[h] = 2.0 * s
    return STATUS_OK


cdef int _gibbs(bitgen_t* rng, double* q, int p, int k,
                const cnp.int64_t* cl_off, const cnp.int64_t* cl_idx,
                const cnp.int64_t* co_off, const cnp.int64_t* co_idx,
                const double* dof, const cnp.int64_t* lcc_off,
                const double* lcc_flat,
                double* a, double* t, double* col, double* wbuf,
                double* sbuf, double* xrow, double* ybuf, double* chk) noexcept nogil:
    cdef int ck = <int> (cl_off[k + 1] - cl_off[k])
    cdef int rk = <int> (co_off[k + 1] - co_off[k])
    _wishart(rng, dof[k], lcc_flat + lcc_off[k], ck, a, t, col, wbuf)
    return _block_update(q, p, cl_idx + cl_off[k], ck, co_idx + co_off[k], rk,
                         wbuf, sbuf, xrow, ybuf, chk)


cdef int _chain(bitgen_t* rng, double* q, int p, int r, int kernel_code, int m,
                const cnp.int64_t* cl_off, const cnp.int64_t* cl_idx,
                const cnp.int64_t* co_off, const cnp.int64_t* co_idx,
                const double* dof, const cnp.int64_t* lcc_off,
                const double* lcc_flat,
                const cnp.int64_t* codes, int n_h, double* out_row,
                int record_all,
                double* a, double* t, double* col, double* wbuf, double* sbuf,
                double* xrow, double* ybuf, double* chk, int* perm) noexcept nogil:
    cdef int step, k, u, status
    status = _record(q, p, codes, n_h, out_row, chk)
    if status:
        return status
    for step in range(1, r + 1):
        if kernel_code == 0:
            k = <int>(random_standard_uniform(rng) * m)
            status = _gibbs(rng, q, p, k, cl_off, cl_idx, co_off, co_idx, dof,
                            lcc_off, lcc_flat, a, t, col, wbuf, sbuf, xrow,
                            ybuf, chk)
            if status:
                return status
        else:
            _fisher_yates(rng, m, perm)
            for u in range(m):
                status = _gibbs(rng, q, p, perm[u], cl_off, cl_idx, co_off,
                                co_idx, dof, lcc_off, lcc_flat, a, t, col,
                                wbuf, sbuf, xrow, ybuf, chk)
                if status:
                    return status
        if record_all:
            status = _record(q, p, codes, n_h, out_row + step * n_h, chk)
            if status:
                return status
    if not record_all:
        status = _record(q, p, codes, n_h, out_row + n_h, chk)
        if status:
            return status
    return STATUS_OK


# ---------------------------------------------------------------------------
# Python-visible entry points
# ---------------------------------------------------------------------------

def wishart_batch(double dof, cnp.ndarray chol_d_arr, Py_ssize_t n, list gens):
    cdef double[:, ::1] chol_d = np.ascontiguousarray(chol_d_arr)
    cdef int p = chol_d.shape[0]
    out_arr = np.empty((n, p, p))
    cdef double[:, :, ::1] out = out_arr
    scratch = np.empty(2 * p * p + p)
    cdef double[::1] sc = scratch
    cdef double* a = &sc[0]
    cdef double* t = a + p * p
    cdef double* col = t + p * p
    cdef bitgen_t* rng
    cdef Py_ssize_t i
    if len(gens) == 1:
        gen = gens[0]
        rng = _bitgen(gen)
        with gen.bit_generator.lock:
            with nogil:
                for i in range(n):
                    _wishart(rng, dof, &chol_d[0, 0], p, a, t, col, &out[i, 0, 0])
    else:
        if len(gens) != n:
            raise ValueError("need one generator, or one per draw")
        for i in range(n):
            gen = gens[i]
            rng = _bitgen(gen)
            with gen.bit_generator.lock:
                _wishart(rng, dof, &chol_d[0, 0], p, a, t, col, &out[i, 0, 0])
    return out_arr


def exact_batch(object prep, Py_ssize_t n, list gens):
    cdef int p = prep.p
    cdef cnp.int64_t[::1] perm = prep.perm
    cdef double[::1] shape = prep.shape
    cdef double[::1] rate = prep.rate
    cdef cnp.int64_t[::1] nbr_off = prep.nbr_off
    cdef cnp.int64_t[::1] nbr_idx = prep.nbr_idx
    cdef double[::1] w = prep.w
    cdef cnp.int64_t[::1] chol_off = prep.chol_off
    cdef double[::1] chol_flat = prep.chol_flat
    cdef cnp.int64_t* nbr_idx_p = NULL
    cdef double* w_p = NULL
    cdef double* chol_flat_p = NULL
    cdef double* z = NULL
    if nbr_idx.shape[0] > 0:
        nbr_idx_p = &nbr_idx[0]
        w_p = &w[0]
        chol_flat_p = &chol_flat[0]
    out_arr = np.empty((n, p, p))
    cdef double[:, :, ::1] out = out_arr
    scratch = np.empty(2 * p * p + 2 * p)
    zbuf = np.empty(max(1, nbr_idx.shape[0]))
    cdef double[::1] sc = scratch
    cdef double[::1] zmv = zbuf
    cdef double* g = &sc[0]
    cdef double* buf = g + p
    cdef double* q = buf + p
    cdef double* chk = q + p * p
    z = &zmv[0]
    cdef bitgen_t* rng
    cdef Py_ssize_t i
    cdef int status = 0
    if len(gens) == 1:
        gen = gens[0]
        rng = _bitgen(gen)
        with gen.bit_generator.lock:
            with nogil:
                for i in range(n):
                    status = _exact(rng, p, &perm[0], &shape[0], &rate[0],
                                    &nbr_off[0], nbr_idx_p, w_p, &chol_off[0],
                                    chol_flat_p, g, z, q, buf, chk,
                                    &out[i, 0, 0])
                    if status:
                        break
        if status:
            raise NumericalError(f"draw {i}: assembled draw is not PD")
    else:
        if len(gens) != n:
            raise ValueError("need one generator, or one per draw")
        for i in range(n):
            gen = gens[i]
            rng = _bitgen(gen)
            with gen.bit_generator.lock:
                status = _exact(rng, p, &perm[0], &shape[0], &rate[0],
                                &nbr_off[0], nbr_idx_p, w_p, &chol_off[0],
                                chol_flat_p, g, z, q, buf, chk, &out[i, 0, 0])
            if status:
                raise NumericalError(f"draw {i}: assembled draw is not PD")
    return out_arr


def claimed_batch(object prep, Py_ssize_t n, list gens):
    cdef int p = prep.p
    cdef int m = prep.m
    cdef double dof = prep.dof
    cdef double[:, ::1] chol_d = prep.chol_d
    cdef unsigned char[:, ::1] pattern = prep.pattern
    cdef cnp.int64_t[::1] cl_off = prep.cl_off
    cdef cnp.int64_t[::1] cl_idx = prep.cl_idx
    cdef cnp.int64_t[::1] co_off = prep.co_off
    cdef cnp.int64_t[::1] co_idx = prep.co_idx
    cdef int init_identity = prep.init_identity
    cdef double rtol = prep.rtol
    cdef long max_sweeps = prep.max_sweeps
    cdef double atol = prep.atol

    sq_off_arr = np.zeros(m + 1, dtype=np.int64)
    cdef Py_ssize_t k
    for k in range(m):
        ck = int(prep.cl_off[k + 1] - prep.cl_off[k])
        sq_off_arr[k + 1] = sq_off_arr[k] + ck * ck
    cdef cnp.int64_t[::1] sq_off = sq_off_arr

    cdef cnp.int64_t* co_idx_p = NULL
    if co_idx.shape[0] > 0:
        co_idx_p = &co_idx[0]

    out_arr = np.empty((n, p, p))
    sweeps_arr = np.empty(n, dtype=np.int64)
    change_arr = np.empty(n)
    conv_arr = np.empty(n, dtype=np.uint8)
    cdef double[:, :, ::1] out = out_arr
    cdef cnp.int64_t[::1] sweeps = sweeps_arr
    cdef double[::1] change = change_arr
    cdef unsigned char[::1] conv = conv_arr

    scratch = np.empty(10 * p * p + 2 * p + int(sq_off_arr[m]))
    cdef double[::1] sc = scratch
    cdef double* a = &sc[0]
    cdef double* t = a + p * p
    cdef double* qt = t + p * p
    cdef double* sigma = qt + p * p
    cdef double* prev = sigma + p * p
    cdef double* sbuf = prev + p * p
    cdef double* ybuf = sbuf + p * p
    cdef double* chk = ybuf + p * p
    cdef double* work = chk + p * p          # p*p + p doubles
    cdef double* col = work + p * p + p
    cdef double* xrow = col + p              # reuse tail: p doubles
    cdef double* tgt = xrow + p

    cdef bitgen_t* rng
    cdef Py_ssize_t i
    cdef int status = 0
    if len(gens) == 1:
        gen = gens[0]
        rng = _bitgen(gen)
        with gen.bit_generator.lock:
            with nogil:
                for i in range(n):
                    status = _claimed(rng, p, dof, &chol_d[0, 0], &pattern[0, 0],
                                      m, &cl_off[0], &cl_idx[0], &co_off[0],
                                      co_idx_p, &sq_off[0], init_identity, rtol,
                                      max_sweeps, atol, a, t, col, qt, sigma,
                                      tgt, prev, sbuf, xrow, ybuf, chk, work,
                                      &out[i, 0, 0], &sweeps[i], &change[i],
                                      &conv[i])
                    if status:
                        break
        if status:
            raise NumericalError(f"draw {i}: fixed-point iteration failed "
                                 f"(status {status})")
    else:
        if len(gens) != n:
            raise ValueError("need one generator, or one per draw")
        for i in range(n):
            gen = gens[i]
            rng = _bitgen(gen)
            with gen.bit_generator.lock:
                status = _claimed(rng, p, dof, &chol_d[0, 0], &pattern[0, 0],
                                  m, &cl_off[0], &cl_idx[0], &co_off[0],
                                  co_idx_p, &sq_off[0], init_identity, rtol,
                                  max_sweeps, atol, a, t, col, qt, sigma, tgt,
                                  prev, sbuf, xrow, ybuf, chk, work,
                                  &out[i, 0, 0], &sweeps[i], &change[i],
                                  &conv[i])
            if status:
                raise NumericalError(f"draw {i}: fixed-point iteration failed "
                                     f"(status {status})")
    return out_arr, sweeps_arr, change_arr, conv_arr


def run_chains(cnp.ndarray q0_arr, object prep, int r, int kernel_code,
               list gens, cnp.ndarray codes_arr, bint record_all):
    cdef double[:, :, ::1] q0 = np.ascontiguousarray(q0_arr)
    cdef Py_ssize_t n = q0.shape[0]
    cdef int p = q0.shape[1]
    cdef int m = prep.m
    cdef cnp.int64_t[::1] cl_off = prep.cl_off
    cdef cnp.int64_t[::1] cl_idx = prep.cl_idx
    cdef cnp.int64_t[::1] co_off = prep.co_off
    cdef cnp.int64_t[::1] co_idx = prep.co_idx
    cdef double[::1] dof = prep.dof
    cdef cnp.int64_t[::1] lcc_off = prep.chol_dcc_off
    cdef double[::1] lcc_flat = prep.chol_dcc_flat
    cdef cnp.int64_t[:, ::1] codes = np.ascontiguousarray(codes_arr, dtype=np.int64)
    cdef int n_h = codes.shape[0]
    cdef int n_rec = (r + 1) if record_all else 2
    cdef cnp.int64_t* co_idx_p = NULL
    if co_idx.shape[0] > 0:
        co_idx_p = &co_idx[0]

    out_arr = np.empty((n, n_rec, n_h))
    cdef double[:, :, ::1] out = out_arr
    qwork = np.empty(p * p)
    cdef double[::1] qw = qwork
    scratch = np.empty(7 * p * p + 2 * p)
    cdef double[::1] sc = scratch
    cdef double* a = &sc[0]
    cdef double* t = a + p * p
    cdef double* wbuf = t + p * p
    cdef double* sbuf = wbuf + p * p
    cdef double* ybuf = sbuf + p * p
    cdef double* chk = ybuf + p * p
    cdef double* col = chk + p * p
    cdef double* xrow = col + p
    permbuf = np.empty(max(1, m), dtype=np.intc)
    cdef int[::1] perm = permbuf

    cdef bitgen_t* rng
    cdef const double* q0p
    cdef Py_ssize_t i
    cdef int j, status
    cdef bint single = len(gens) == 1
    if not single and len(gens) != n:
        raise ValueError("need one generator, or one per chain")
    for i in range(n):
        gen = gens[0] if single else gens[i]
        rng = _bitgen(gen)
        with gen.bit_generator.lock:
            q0p = &q0[i, 0, 0]
            for j in range(p * p):
                qw[j] = q0p[j]
            status = _chain(rng, &qw[0], p, r, kernel_code, m, &cl_off[0],
                            &cl_idx[0], &co_off[0], co_idx_p, &dof[0],
                            &lcc_off[0], &lcc_flat[0], &codes[0, 0], n_h,
                            &out[i, 0, 0], record_all, a, t, col, wbuf, sbuf,
                            xrow, ybuf, chk, &perm[0])
        if status:
            raise NumericalError(f"chain {i}: non-PD state (status {status})")
    return out_arr


def resample_gaps(cnp.ndarray t1_arr, cnp.ndarray t2_arr, cnp.ndarray v_arr,
                  cnp.ndarray sort_idx_arr, Py_ssize_t jstar):
    cdef double[::1] t1 = np.ascontiguousarray(t1_arr)
    cdef double[::1] t2 = np.ascontiguousarray(t2_arr)
    cdef unsigned char[:, ::1] v = np.ascontiguousarray(v_arr, dtype=np.uint8)
    cdef cnp.int64_t[::1] idx = np.ascontiguousarray(sort_idx_arr, dtype=np.int64)
    cdef Py_ssize_t nb = v.shape[0]
    cdef Py_ssize_t s = t1.shape[0]
    if v.shape[1] != s or idx.shape[0] != 2 * s:
        raise ValueError("shape mismatch")
    if not 1 <= jstar <= s:
        raise ValueError("jstar out of range")
    out_arr = np.empty(nb)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t b, u
    cdef cnp.int64_t e
    cdef long c1, c2
    cdef double val, q1, q2
    cdef bint tocol1, got1, got2
    with nogil:
        for b in range(nb):
            c1 = 0
            c2 = 0
            q1 = 0.0
            q2 = 0.0
            got1 = False
            got2 = False
            for u in range(2 * s):
                e = idx[u]
                if e < s:
                    val = t1[e]
                    tocol1 = v[b, e] != 0
                else:
                    val = t2[e - s]
                    tocol1 = v[b, e - s] == 0
                if tocol1:
                    c1 += 1
                    if c1 == jstar:
                        q1 = val
                        got1 = True
                        if got2:
                            break
                else:
                    c2 += 1
                    if c2 == jstar:
                        q2 = val
                        got2 = True
                        if got1:
                            break
            out[b] = fabs(q1 - q2)
    return out_arr
