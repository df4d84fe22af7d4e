"""Pure-Python (numpy) implementations of the hot kernels.

Mirrors the compiled ``_kernels`` module: the quadrature chain is the
same log-space recursion, and the contention loop consumes SplitMix64
draws with the exact same indexing so both backends produce identical
integer outcomes for identical seeds.
"""
from __future__ import annotations

import numpy as np
from scipy.special import log_ndtr, logsumexp

SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
SM_M1 = np.uint64(0xBF58476D1CE4E5B9)
SM_M2 = np.uint64(0x94D049BB133111EB)

MAX_CONTENDERS = 64

_LOG_2PI = float(np.log(2.0 * np.pi))


def chain_logprob(mask: int, t: np.ndarray, rho: float,
                  r: np.ndarray, logw: np.ndarray) -> float:
    n = t.shape[0]
    om = 1.0 - rho * rho
    c_int = np.sqrt(2.0 * om / (1.0 + rho * rho))
    c_fin = np.sqrt(2.0 * om)
    kap = np.sqrt(2.0 * (1.0 - rho ** 4))
    s = np.where([(mask >> i) & 1 for i in range(n)], 1.0, -1.0)

    scale = c_fin if n == 2 else c_int
    x = t[1] + s[1] * scale * r
    v = (0.5 * (np.log(om) + _LOG_2PI)
         + log_ndtr(-s[0] * (t[0] - rho * x) / np.sqrt(om))
         + rho * rho * x * x / (2.0 * om))
    for k in range(2, n):
        tk = t[k - 1]
        scale = c_fin if (k + 1) == n else c_int
        x = t[k] + s[k] * scale * r
        pref = (0.5 * np.log(2.0 * om / (1.0 + rho * rho))
                - ((rho * rho + 1.0) * tk * tk - 2.0 * rho * x * tk)
                / (2.0 * om))
        lin = s[k - 1] * np.outer(2.0 * rho * x - 2.0 * tk * (rho * rho + 1.0),
                                  r) / kap
        v = pref + logsumexp(lin + logw[None, :] + v[None, :], axis=1)
    tn = t[n - 1]
    log_c0 = -0.5 * (n - 1) * np.log(om) - 0.5 * n * _LOG_2PI
    expo = -(tn * tn + s[n - 1] * 2.0 * c_fin * tn * r) / (2.0 * om)
    return float(log_c0 + np.log(c_fin) + logsumexp(logw + expo + v))


def chain_logprob_many(masks: np.ndarray, t: np.ndarray, rho: float,
                       r: np.ndarray, logw: np.ndarray) -> np.ndarray:
    return np.array([chain_logprob(int(m), t, rho, r, logw) for m in masks])


def _splitmix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * SM_M1
    z = (z ^ (z >> np.uint64(27))) * SM_M2
    return z ^ (z >> np.uint64(31))


def _draw(seed: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return _splitmix(seed + idx * SM_GAMMA)


def contention_rounds(kvec: np.ndarray, seeds: np.ndarray,
                      cw_min: int, stages: int):
    """Vectorized equivalent of the compiled contention loop."""
    nr = kvec.shape[0]
    idle = np.zeros(nr, dtype=np.int64)
    cols = np.zeros(nr, dtype=np.int64)
    crs = np.zeros(nr, dtype=np.int64)
    k = np.minimum(kvec, MAX_CONTENDERS)
    live = k > 0
    if not live.any():
        return idle, cols, crs
    kmax = int(k.max())
    colmask = np.arange(kmax)[None, :] < k[:, None]
    seeds = seeds.astype(np.uint64, copy=False)
    iidx = (np.arange(kmax, dtype=np.uint64) + np.uint64(1))[None, :]
    bo = np.where(colmask,
                  (_draw(seeds[:, None], iidx)
                   % np.uint64(cw_min)).astype(np.int64),
                  np.int64(2 ** 60))
    st = np.zeros((nr, kmax), dtype=np.int64)
    ctr = k.astype(np.uint64)
    open_ = live.copy()
    guard = 0
    while open_.any():
        guard += 1
        if guard > 100000:
            raise RuntimeError("contention loop failed to terminate")
        rows = np.where(open_)[0]
        mn = bo[rows].min(axis=1)
        idle[rows] += mn
        bo[rows] -= mn[:, None]
        tx = (bo[rows] == 0) & colmask[rows]
        ntx = tx.sum(axis=1)
        done = ntx == 1
        open_[rows[done]] = False
        crows = rows[~done]
        if crows.size == 0:
            continue
        txc = tx[~done]
        ntxc = ntx[~done]
        cols[crows] += 1
        crs[crows] += ntxc
        stc = st[crows]
        stc = np.where(txc, np.minimum(stc + 1, stages), stc)
        st[crows] = stc
        rank = (np.cumsum(txc, axis=1) - 1).astype(np.uint64)
        didx = ctr[crows][:, None] + rank + np.uint64(1)
        bound = (np.int64(cw_min) << stc).astype(np.uint64)
        newbo = (_draw(seeds[crows][:, None], didx) % bound).astype(np.int64)
        bo[crows] = np.where(txc, newbo, bo[crows])
        ctr[crows] += ntxc.astype(np.uint64)
    return idle, cols, crs
