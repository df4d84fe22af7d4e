# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: the per-codeword quadrature chain (log-space) and
the slotted DCF contention loop.  Pure-Python equivalents live in
``pykern.py``; the driver selects one implementation at import time."""

import numpy as np

cimport numpy as cnp
from libc.math cimport erfc, exp, fmin, log, log1p, sqrt, INFINITY
from libc.stdint cimport int64_t, uint8_t, uint64_t

cnp.import_array()

cdef double LOG_2PI = 1.8378770664093453
cdef double SQRT1_2 = 0.7071067811865476


cdef inline double log_ndtr_c(double x) nogil:
    """log Phi(x); erfc path down to x=-20, asymptotic series below."""
    cdef double z, s
    if x >= -20.0:
        return log(0.5 * erfc(-x * SQRT1_2))
    z = 1.0 / (x * x)
    s = z * (-1.0 + z * (3.0 + z * (-15.0 + z * 105.0)))
    return -0.5 * x * x - 0.5 * LOG_2PI - log(-x) + log1p(s)


cdef inline double logsumexp_buf(double* buf, Py_ssize_t n) nogil:
    cdef double mx = -INFINITY
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        if buf[i] > mx:
            mx = buf[i]
    if mx == -INFINITY:
        return -INFINITY
    for i in range(n):
        acc += exp(buf[i] - mx)
    return mx + log(acc)


cdef double _chain_one(uint64_t mask, Py_ssize_t n, const double* t,
                       double rho, const double* r, const double* logw,
                       Py_ssize_t nq, double* v, double* vn, double* buf) nogil:
    """log Pr{codeword} via the iterative single-integral chain, log-space.

    Stage points are threshold-centered as in the closed-form derivation:
    stage k+1 consumes q_k at t_{k+1} + s_{k+1} * scale * r_i.
    """
    cdef double om = 1.0 - rho * rho
    cdef double c_int = sqrt(2.0 * om / (1.0 + rho * rho))
    cdef double c_fin = sqrt(2.0 * om)
    cdef double kap = sqrt(2.0 * (1.0 - rho * rho * rho * rho))
    cdef Py_ssize_t i, j, k
    cdef double s1, sk, sn, scale, x, tk, pref, lin, tn, log_c0, expo
    # stage-1 closed form at the points demanded by stage 2
    s1 = 1.0 if (mask & 1) else -1.0
    sk = 1.0 if ((mask >> 1) & 1) else -1.0
    scale = c_fin if n == 2 else c_int
    for i in range(nq):
        x = t[1] + sk * scale * r[i]
        v[i] = (0.5 * (log(om) + LOG_2PI)
                + log_ndtr_c(-s1 * (t[0] - rho * x) / sqrt(om))
                + rho * rho * x * x / (2.0 * om))
    # interior stages 2..n-1 (1-based)
    for k in range(2, n):
        tk = t[k - 1]
        sk = 1.0 if ((mask >> (k - 1)) & 1) else -1.0
        sn = 1.0 if ((mask >> k) & 1) else -1.0
        scale = c_fin if (k + 1) == n else c_int
        for j in range(nq):
            x = t[k] + sn * scale * r[j]
            pref = (0.5 * log(2.0 * om / (1.0 + rho * rho))
                    - ((rho * rho + 1.0) * tk * tk - 2.0 * rho * x * tk)
                    / (2.0 * om))
            for i in range(nq):
                lin = sk * (2.0 * rho * x - 2.0 * tk * (rho * rho + 1.0)) \
                    * r[i] / kap
                buf[i] = logw[i] + lin + v[i]
            vn[j] = pref + logsumexp_buf(buf, nq)
        for j in range(nq):
            v[j] = vn[j]
    # final stage
    tn = t[n - 1]
    sn = 1.0 if ((mask >> (n - 1)) & 1) else -1.0
    log_c0 = -0.5 * (n - 1) * log(om) - 0.5 * n * LOG_2PI
    for i in range(nq):
        expo = -(tn * tn + sn * 2.0 * c_fin * tn * r[i]) / (2.0 * om)
        buf[i] = logw[i] + expo + v[i]
    return log_c0 + log(c_fin) + logsumexp_buf(buf, nq)


def chain_logprob(uint64_t mask, const double[::1] t, double rho,
                  const double[::1] r, const double[::1] logw):
    cdef Py_ssize_t n = t.shape[0]
    cdef Py_ssize_t nq = r.shape[0]
    cdef cnp.ndarray[double, ndim=1] v = np.empty(nq)
    cdef cnp.ndarray[double, ndim=1] vn = np.empty(nq)
    cdef cnp.ndarray[double, ndim=1] buf = np.empty(nq)
    cdef double out
    with nogil:
        out = _chain_one(mask, n, &t[0], rho, &r[0], &logw[0], nq,
                         <double*> v.data, <double*> vn.data,
                         <double*> buf.data)
    return out


def chain_logprob_many(const uint64_t[::1] masks, const double[::1] t, double rho,
                       const double[::1] r, const double[::1] logw):
    cdef Py_ssize_t n = t.shape[0]
    cdef Py_ssize_t nq = r.shape[0]
    cdef Py_ssize_t nm = masks.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(nm)
    cdef cnp.ndarray[double, ndim=1] v = np.empty(nq)
    cdef cnp.ndarray[double, ndim=1] vn = np.empty(nq)
    cdef cnp.ndarray[double, ndim=1] buf = np.empty(nq)
    cdef double* vp = <double*> v.data
    cdef double* vnp = <double*> vn.data
    cdef double* bufp = <double*> buf.data
    cdef double* outp = <double*> out.data
    cdef Py_ssize_t m
    with nogil:
        for m in range(nm):
            outp[m] = _chain_one(masks[m], n, &t[0], rho, &r[0], &logw[0],
                                 nq, vp, vnp, bufp)
    return out


# ---------------------------------------------------------------------------
# DCF contention
# ---------------------------------------------------------------------------

cdef uint64_t SM_GAMMA = 0x9E3779B97F4A7C15u
cdef uint64_t SM_M1 = 0xBF58476D1CE4E5B9u
cdef uint64_t SM_M2 = 0x94D049BB133111EBu


cdef inline uint64_t splitmix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * SM_M1
    z = (z ^ (z >> 27)) * SM_M2
    return z ^ (z >> 31)


cdef inline uint64_t draw(uint64_t seed, uint64_t idx) nogil:
    return splitmix(seed + idx * SM_GAMMA)


MAX_CONTENDERS = 64


def contention_rounds(const int64_t[::1] kvec, const uint64_t[::1] seeds,
                      int cw_min, int stages):
    """Run the backoff contention of each round to the first success.

    Per round: k contenders draw uniform backoffs in [0, CW-1]; the unique
    minimum transmits, ties collide and redraw from a doubled window
    (capped at cw_min * 2^stages); non-colliders freeze.  Rounds with
    k <= 1 consume draws the same way (a single contender still draws its
    backoff; k <= 0 rounds are untouched zeros).

    Returns (idle_slots, collisions, colliders_total) int64 arrays.
    """
    cdef Py_ssize_t nr = kvec.shape[0]
    cdef cnp.ndarray[int64_t, ndim=1] idle = np.zeros(nr, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] cols = np.zeros(nr, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] crs = np.zeros(nr, dtype=np.int64)
    cdef int64_t* idlep = <int64_t*> idle.data
    cdef int64_t* colsp = <int64_t*> cols.data
    cdef int64_t* crsp = <int64_t*> crs.data
    cdef int64_t bo[64]
    cdef int st[64]
    cdef Py_ssize_t rr, i
    cdef int64_t k, mn, ntx, ii
    cdef uint64_t seed, ctr, bound
    cdef int64_t w = cw_min
    with nogil:
        for rr in range(nr):
            k = kvec[rr]
            if k <= 0:
                continue
            if k > 64:
                k = 64
            seed = seeds[rr]
            for i in range(k):
                bo[i] = <int64_t> (draw(seed, <uint64_t> (i + 1))
                                   % <uint64_t> w)
                st[i] = 0
            ctr = <uint64_t> k
            while True:
                mn = bo[0]
                for i in range(1, k):
                    if bo[i] < mn:
                        mn = bo[i]
                idlep[rr] += mn
                ntx = 0
                for i in range(k):
                    bo[i] -= mn
                    if bo[i] == 0:
                        ntx += 1
                if ntx == 1:
                    break
                colsp[rr] += 1
                crsp[rr] += ntx
                ii = 0
                for i in range(k):
                    if bo[i] == 0:
                        if st[i] < stages:
                            st[i] += 1
                        bound = <uint64_t> (w << st[i])
                        bo[i] = <int64_t> (draw(seed, ctr + <uint64_t> (ii + 1))
                                           % bound)
                        ii += 1
                ctr += <uint64_t> ntx
    return idle, cols, crs
