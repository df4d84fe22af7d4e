"""Joint reception-codeword probabilities under correlated shadowing.

The probability that a given subset of exponentially correlated links is
above the reliability threshold and the rest below is a box probability
of a standard normal vector with rho^|i-j| correlation.  The Markov
(AR(1)) structure of that correlation reduces it to a chain of single
integrals evaluated with the half-range Gaussian quadrature rule:
``q1_eval`` is the closed-form innermost integral, ``qk_step`` applies
one stage of the weighted-sum recursion, and ``codeword_probability``
runs the full chain with the C0 = det(Sigma)^{-1/2} (2 pi)^{-n/2}
prefactor.

Numerical notes, enforced by the test suite:

* The production chain runs in log-space throughout; stage values carry
  exp(rho^2 x^2 / 2(1-rho^2)) factors that overflow float64 well before
  rho -> 1.
* The threshold-centered substitution stops covering the integrand mass
  as the correlation grows, so the rule order is upsampled internally on
  a fixed ladder calibrated to keep the 2^n codeword probabilities
  summing to 1 within ~1e-7 up to rho = 0.9.
* Beyond rho = 0.9 (and whenever sigma=0 links leave a non-uniform lag
  structure behind) the same chain of integrals is evaluated on a
  uniform grid in the bounded filter parametrization
  V_k(x) = int_{R_k} N(y; lag x, 1-lag^2) V_{k-1}(y) dy with per-cell
  quintic interpolation integrated against the exact Gaussian kernel;
  that form stays stable at any supported correlation.

A vectorized Monte Carlo sampler is the independent oracle for all of
the above.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr

from ._core import kernels
from .errors import ConfigError, NumericError
from .quadrature import QuadratureRule, _rule_unchecked
from .shadowing import RHO_MAX, KmsMatrix, LinkStat, kms_factor

ENUMERATION_CAP = 12
NEGATIVE_TOL = -1e-9

# (rho upper bound, multiplier on the base rule order); calibrated so the
# partition of unity holds to ~1e-7 at each bracket's top for |t| <= 3.
_UPSAMPLE_LADDER = ((0.25, 1), (0.45, 2), (0.60, 3), (0.72, 4),
                    (0.80, 5), (0.86, 7), (0.905, 9))
CHAIN_RHO_MAX = 0.905
_EFF_COUNT_CAP = 256


@dataclass(frozen=True)
class RelayMask:
    """n-bit reception codeword; bit i set means relay i+1 decoded."""

    bits: int
    width: int

    def __post_init__(self):
        if self.width < 1:
            raise ConfigError(f"mask width must be >= 1, got {self.width}")
        if not 0 <= self.bits < (1 << self.width):
            raise ConfigError(
                f"bits={self.bits} out of range for width {self.width}")

    @property
    def hamming_weight(self) -> int:
        return self.bits.bit_count()

    def bit(self, i: int) -> int:
        return (self.bits >> i) & 1

    def __iter__(self):
        return ((self.bits >> i) & 1 for i in range(self.width))


def _thresholds(links, gamma_star_db: float) -> np.ndarray:
    """Normalized thresholds; sigma=0 links degenerate to +-inf."""
    t = np.empty(len(links))
    for i, link in enumerate(links):
        if link.sigma_db == 0.0:
            t[i] = math.inf if link.mu_db <= gamma_star_db else -math.inf
        else:
            t[i] = (gamma_star_db - link.mu_db) / link.sigma_db
    return t


def _eff_count(rho: float, base: int) -> int:
    for hi, factor in _UPSAMPLE_LADDER:
        if rho < hi:
            return min(base * factor, _EFF_COUNT_CAP)
    return min(base * _UPSAMPLE_LADDER[-1][1], _EFF_COUNT_CAP)


# ---------------------------------------------------------------------------
# Literal chain steps (linear scale)
# ---------------------------------------------------------------------------

def q1_eval(x: float, event_first: int, link1: LinkStat,
            gamma_star_db: float, rho: float) -> float:
    """Innermost chain integral, closed form:

        sqrt(2 pi (1-rho^2)) * Q(+-(t - rho x) / sqrt(1-rho^2))
                             * exp(rho^2 x^2 / (2 (1-rho^2)))

    with the + sign when the first link's event is above-threshold and
    t its normalized threshold.
    """
    if not 0.0 <= rho < 1.0:
        raise ConfigError(f"rho must be in [0, 1), got {rho}")
    om = 1.0 - rho * rho
    t = (gamma_star_db - link1.mu_db) / link1.sigma_db
    sgn = 1.0 if event_first else -1.0
    return float(np.exp(0.5 * np.log(2.0 * np.pi * om)
                        + log_ndtr(-sgn * (t - rho * x) / np.sqrt(om))
                        + rho * rho * x * x / (2.0 * om)))


def qk_step(prev_values, k: int, event_k: int, x_points, rule: QuadratureRule,
            link_k: LinkStat, gamma_star_db: float, rho: float) -> np.ndarray:
    """One interior stage: the weighted sum over the rule's nodes.

    ``prev_values`` must hold the previous stage evaluated at this
    stage's substitution points t_k + s_k sqrt(2(1-rho^2)/(1+rho^2)) r_i
    (plus sign for an above-threshold event at stage k); the result is
    q_k at the caller-chosen ``x_points`` of the next stage.
    """
    prev = np.asarray(prev_values, dtype=float)
    if prev.shape[0] != rule.count:
        raise ConfigError(
            f"expected {rule.count} previous-stage values, got {prev.shape[0]}")
    x_points = np.asarray(x_points, dtype=float)
    om = 1.0 - rho * rho
    kap = math.sqrt(2.0 * (1.0 - rho ** 4))
    tk = (gamma_star_db - link_k.mu_db) / link_k.sigma_db
    sgn = 1.0 if event_k else -1.0
    pref = (math.sqrt(2.0 * om / (1.0 + rho * rho))
            * np.exp(-((rho * rho + 1.0) * tk * tk - 2.0 * rho * x_points * tk)
                     / (2.0 * om)))
    lin = sgn * np.outer(2.0 * rho * x_points - 2.0 * tk * (rho * rho + 1.0),
                         rule.nodes) / kap
    return pref * np.sum(rule.weights[None, :] * np.exp(lin) * prev[None, :],
                         axis=1)


# ---------------------------------------------------------------------------
# Grid filter: stable evaluation for strong correlation / non-uniform lags
# ---------------------------------------------------------------------------

_GRID_SPAN = 9.0
_KERNEL_WIN = 8.6
_PTS_PER_SIGMA = 6
_GL_X, _GL_W = np.polynomial.legendre.leggauss(7)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W
_OFF0 = -2  # quintic samples sit at cell_left + (OFF0 .. OFF0+5) * h
_AINV = np.linalg.inv(
    np.vander(np.arange(6, dtype=float) + _OFF0, 6, increasing=True))


def _reflect_idx(idx: np.ndarray, m: int) -> np.ndarray:
    idx = np.where(idx < 0, -idx - 1, idx)
    return np.where(idx > m - 1, 2 * m - 1 - idx, idx)


def _stage_matrix(grid, h, thr, side, lag, s, out_grid):
    """Dense operator A with (A v)[j] = integral over the thr side of
    N(y; lag*out_grid[j], s^2) * V(y) dy for V sampled on ``grid``.

    Assembled from the banded cell structure: per cell, the quintic
    interpolant's six sample weights are integrated against the kernel
    with 7-point Gauss-Legendre (the cell is a small fraction of the
    kernel sigma, so this is exact to machine precision).
    """
    m = grid.size
    nj = out_grid.size
    mu = lag * out_grid
    g0 = grid[0]
    lo = np.maximum(mu - _KERNEL_WIN * s, g0)
    hi = np.minimum(mu + _KERNEL_WIN * s, grid[-1])
    if side > 0:
        lo = np.maximum(lo, thr)
    else:
        hi = np.minimum(hi, thr)
    first = np.clip(np.floor((lo - g0) / h).astype(np.int64), 0, m - 2)
    nband = int(np.ceil(2 * _KERNEL_WIN * s / h)) + 2
    A = np.zeros((nj, m))
    inv2s2 = 0.5 / (s * s)
    norm = 1.0 / (math.sqrt(2.0 * math.pi) * s)
    jj = np.arange(nj)
    for d in range(nband):
        c = first + d
        ok = c <= m - 2
        cc = np.where(ok, c, m - 2)
        a = np.maximum(g0 + cc * h, lo)
        b = np.minimum(g0 + (cc + 1) * h, hi)
        width = b - a
        ok &= width > 0
        if not ok.any():
            continue
        width = np.where(ok, width, 0.0)
        y = a[None, :] + np.outer(_GL_X, width)
        ker = norm * np.exp(-inv2s2 * (y - mu[None, :]) ** 2)
        xi = (y - (g0 + cc * h)[None, :]) / h
        # g[p, j] = width_j * sum_q GLW_q ker_qj xi_qj^p
        pw = np.ones_like(y)
        g = np.empty((6, nj))
        for p in range(6):
            g[p] = width * np.einsum("q,qj->j", _GL_W, ker * pw)
            pw = pw * xi
        # sample weights: w[l, j] = sum_p AINV[p, l] g[p, j]
        wl = _AINV.T @ g
        cols = _reflect_idx(cc[None, :] + _OFF0 + np.arange(6)[:, None], m)
        for ell in range(6):
            np.add.at(A, (jj, cols[ell]), np.where(ok, wl[ell], 0.0))
    # saturated tails outside the grid
    if side > 0:
        upper_cut = max(grid[-1], thr)
        A[:, m - 1] += ndtr((mu - upper_cut) / s)
        if thr < g0:
            A[:, 0] += ndtr((g0 - mu) / s) - ndtr((thr - mu) / s)
    else:
        lower_cut = min(g0, thr)
        A[:, 0] += ndtr((lower_cut - mu) / s)
        if thr > grid[-1]:
            A[:, m - 1] += ndtr((thr - mu) / s) - ndtr((grid[-1] - mu) / s)
    return A


def _grid_setup(lags: np.ndarray):
    s_all = np.sqrt(1.0 - lags ** 2)
    h = float(s_all.min()) / _PTS_PER_SIGMA
    m = int(math.ceil(2 * _GRID_SPAN / h)) + 1
    if m > 200_000:
        raise NumericError(
            f"correlation too extreme for the grid evaluator (grid size {m})")
    grid = np.linspace(-_GRID_SPAN, _GRID_SPAN, m)
    return grid, float(grid[1] - grid[0]), s_all


def _grid_stage_apply(v, grid, h, thr, side, lag, s, out_grid):
    A = _stage_matrix(grid, h, thr, side, lag, s, out_grid)
    return A @ v


def _grid_prob(bits, t, lags) -> float:
    """Pr{codeword} (linear scale) for a normal chain with per-stage lags."""
    n = len(bits)
    grid, h, s_all = _grid_setup(np.asarray(lags, dtype=float))
    sgn = 1.0 if bits[0] else -1.0
    v = ndtr(sgn * (lags[0] * grid - t[0]) / s_all[0])
    for k in range(2, n):
        side = 1 if bits[k - 1] else -1
        v = _grid_stage_apply(v, grid, h, t[k - 1], side, lags[k - 1],
                              s_all[k - 1], grid)
    side = 1 if bits[n - 1] else -1
    res = _grid_stage_apply(v, grid, h, t[n - 1], side, 0.0, 1.0,
                            np.zeros(1))
    return float(res[0])


def _grid_distribution(t, lags) -> np.ndarray:
    """All 2^n codeword probabilities via the grid filter; the two
    per-stage operators are shared across codeword prefixes."""
    n = len(t)
    grid, h, s_all = _grid_setup(np.asarray(lags, dtype=float))
    states = np.stack([ndtr(-(lags[0] * grid - t[0]) / s_all[0]),
                       ndtr((lags[0] * grid - t[0]) / s_all[0])])
    for k in range(2, n):
        a0 = _stage_matrix(grid, h, t[k - 1], -1, lags[k - 1], s_all[k - 1],
                           grid)
        a1 = _stage_matrix(grid, h, t[k - 1], 1, lags[k - 1], s_all[k - 1],
                           grid)
        states = np.concatenate([states @ a0.T, states @ a1.T], axis=0)
    zero = np.zeros(1)
    out = np.empty(2 ** n)
    half = 2 ** (n - 1)
    for side, offset in ((-1, 0), (1, half)):
        w = _stage_matrix(grid, h, t[n - 1], side, 0.0, 1.0, zero)[0]
        out[offset:offset + half] = states @ w
    return out


# ---------------------------------------------------------------------------
# Production dispatch
# ---------------------------------------------------------------------------

def _chain_logprob_masks(masks, t, rho, base_count):
    rule = _rule_unchecked(_eff_count(rho, base_count))
    return kernels.chain_logprob_many(
        np.ascontiguousarray(masks, dtype=np.uint64),
        np.ascontiguousarray(t, dtype=float),
        float(rho), rule.nodes, rule.log_weights)


def _sub_prob(sub_bits, sub_t, lags, base_count) -> float:
    """Probability of the stochastic sub-chain (linear scale)."""
    m = len(sub_bits)
    if m == 0:
        return 1.0
    if m == 1:
        return float(ndtr(-sub_t[0]) if sub_bits[0] else ndtr(sub_t[0]))
    uniform = bool(np.all(lags == lags[0]))
    lag0 = float(lags[0])
    if uniform and lag0 <= CHAIN_RHO_MAX:
        mask = sum(b << i for i, b in enumerate(sub_bits))
        logp = float(_chain_logprob_masks([mask], sub_t, lag0, base_count)[0])
        return math.exp(logp)
    return _grid_prob(sub_bits, sub_t, lags)


def _split_deterministic(mask_bits: int, t: np.ndarray, rho: float):
    """Factor out sigma=0 links (threshold +-inf).  Returns None when a
    deterministic link contradicts its mask bit, else the stochastic
    sub-problem (bits, thresholds, consecutive lags)."""
    n = t.shape[0]
    keep = []
    for i in range(n):
        bit = (mask_bits >> i) & 1
        if math.isinf(t[i]):
            det_bit = 0 if t[i] > 0 else 1
            if det_bit != bit:
                return None
        else:
            keep.append(i)
    sub_t = t[keep]
    sub_bits = [(mask_bits >> i) & 1 for i in keep]
    lags = np.array([rho ** (keep[j + 1] - keep[j])
                     for j in range(len(keep) - 1)])
    return sub_bits, sub_t, lags


def _check_rho(rho: float):
    if not 0.0 <= rho < 1.0:
        raise ConfigError(f"rho must be in [0, 1), got {rho}")
    if rho >= RHO_MAX:
        raise NumericError(
            f"rho={rho} too close to 1 (correlation matrix nearly singular); "
            f"supported range is [0, {RHO_MAX})")


def codeword_probability(mask: RelayMask, links, rho: float,
                         gamma_star_db: float, rule: QuadratureRule) -> float:
    """Pr{reception codeword} for one side's n correlated links."""
    if len(links) == 0:
        raise ConfigError("at least one link is required")
    if mask.width != len(links):
        raise ConfigError(
            f"mask width {mask.width} != number of links {len(links)}")
    _check_rho(rho)
    t = _thresholds(links, gamma_star_db)
    split = _split_deterministic(mask.bits, t, rho)
    if split is None:
        return 0.0
    p = _sub_prob(*split, base_count=rule.count)
    if p < NEGATIVE_TOL:
        raise NumericError(f"codeword probability {p} below -1e-9")
    return min(max(p, 0.0), 1.0)


def codeword_distribution(links, rho: float, gamma_star_db: float,
                          rule: QuadratureRule,
                          enumeration_cap: int = ENUMERATION_CAP) -> np.ndarray:
    """Probabilities of all 2^n codewords, indexed by mask bits."""
    n = len(links)
    if n < 1:
        raise ConfigError("at least one link is required")
    if n > enumeration_cap:
        raise ConfigError(
            f"n={n} exceeds the codeword enumeration cap ({enumeration_cap}); "
            "raise it explicitly if the 2^n cost is acceptable")
    _check_rho(rho)
    t = _thresholds(links, gamma_star_db)
    det = np.isinf(t)
    keep = np.where(~det)[0]
    m = keep.size
    sub_t = t[keep]
    lags = np.array([rho ** int(keep[j + 1] - keep[j]) for j in range(m - 1)])

    if m == 0:
        sub = np.array([1.0])
    elif m == 1:
        q = float(ndtr(-sub_t[0]))
        sub = np.array([1.0 - q, q])
    elif np.all(lags == lags[0]) and float(lags[0]) <= CHAIN_RHO_MAX:
        masks = np.arange(2 ** m, dtype=np.uint64)
        sub = np.exp(_chain_logprob_masks(masks, sub_t, float(lags[0]),
                                          rule.count))
    else:
        sub = _grid_distribution(sub_t, lags)
    if sub.min() < NEGATIVE_TOL:
        raise NumericError(
            f"codeword distribution entry {sub.min()} below -1e-9")
    sub = np.clip(sub, 0.0, 1.0)

    if m == n:
        return sub
    det_mask = 0
    for i in np.where(det)[0]:
        if t[i] < 0:  # deterministically above threshold
            det_mask |= 1 << int(i)
    out = np.zeros(2 ** n)
    for sm in range(2 ** m):
        full = det_mask
        for j in range(m):
            if (sm >> j) & 1:
                full |= 1 << int(keep[j])
        out[full] = sub[sm]
    return out


def codeword_probability_mc(mask: RelayMask, links, rho: float,
                            gamma_star_db: float, samples: int,
                            seed: int) -> tuple[float, float]:
    """Monte Carlo oracle: draw correlated gains through the Cholesky
    factor, count exact mask matches.  Returns (estimate, binomial stderr).
    """
    if samples < 10_000:
        raise ConfigError(f"samples must be >= 1e4, got {samples}")
    n = len(links)
    if mask.width != n:
        raise ConfigError(
            f"mask width {mask.width} != number of links {len(links)}")
    _check_rho(rho)
    L = kms_factor(KmsMatrix(n=n, rho=rho))
    mu = np.array([s.mu_db for s in links])
    sigma = np.array([s.sigma_db for s in links])
    want = np.array([bool(mask.bit(i)) for i in range(n)])
    rng = np.random.default_rng(seed)
    hits = 0
    remaining = samples
    while remaining > 0:
        chunk = min(remaining, 1_000_000)
        z = rng.standard_normal((chunk, n)) @ L.T
        gains = mu[None, :] + sigma[None, :] * z
        match = (gains > gamma_star_db) == want[None, :]
        hits += int(match.all(axis=1).sum())
        remaining -= chunk
    p = hits / samples
    stderr = math.sqrt(p * (1.0 - p) / samples)
    return p, stderr
