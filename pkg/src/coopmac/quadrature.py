"""Gaussian quadrature for the half-range weight exp(-x^2) on [0, inf).

Rules are regenerated from the analytic moments

    m_k = integral_0^inf x^k exp(-x^2) dx = Gamma((k+1)/2) / 2

via the Chebyshev moment-to-recurrence algorithm followed by a
Golub-Welsch eigenvalue step.  The moment recursion is numerically
violent, so it runs in mpmath arbitrary precision and only the final
nodes/weights are rounded to float64.  An n-point rule integrates
monomials x^k exactly for k <= 2n-1, which the test suite checks
against the Gamma moments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigError

MAX_PUBLIC_COUNT = 64


def half_gauss_moment(k: int) -> float:
    """Analytic moment integral_0^inf x^k exp(-x^2) dx."""
    return 0.5 * math.gamma((k + 1) / 2.0)


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights for integral_0^inf exp(-x^2) f(x) dx ~ sum w_i f(r_i)."""

    nodes: np.ndarray
    weights: np.ndarray
    count: int
    log_weights: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.log_weights is None:
            object.__setattr__(self, "log_weights", np.log(self.weights))

    def integrate(self, f) -> float:
        return float(np.sum(self.weights * f(self.nodes)))


@lru_cache(maxsize=64)
def _recurrence(count: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Three-term recurrence coefficients (alpha_k, beta_k) of the monic
    orthogonal polynomials for the half-range weight, via the Chebyshev
    moment algorithm.  The moment recursion sheds roughly 1.5 digits per
    order, so it runs in mpmath; the coefficients themselves are well
    conditioned and are returned as float64."""
    import mpmath as mp

    with mp.workdps(50 + 3 * count):
        mom = [mp.gamma(mp.mpf(k + 1) / 2) / 2 for k in range(2 * count)]
        alpha = [mom[1] / mom[0]]
        beta = [mom[0]]
        sig_prev = [mp.mpf(0)] * (2 * count + 1)
        sig_cur = list(mom) + [mp.mpf(0)]
        for k in range(1, count):
            sig_new = [mp.mpf(0)] * (2 * count + 1)
            for ell in range(k, 2 * count - k):
                sig_new[ell] = (sig_cur[ell + 1] - alpha[k - 1] * sig_cur[ell]
                                - beta[k - 1] * sig_prev[ell])
            alpha.append(sig_new[k + 1] / sig_new[k]
                         - sig_cur[k] / sig_cur[k - 1])
            beta.append(sig_new[k] / sig_cur[k - 1])
            sig_prev, sig_cur = sig_cur, sig_new
        return (tuple(float(a) for a in alpha),
                tuple(float(b) for b in beta))


def _orthonormal_values(x: np.ndarray, alpha, beta, upto: int):
    """Values and derivatives of the orthonormal polynomials p_0..p_upto
    at the points x, by the three-term recurrence (forward stable for the
    dominant solution, so the huge outer-node values keep full relative
    accuracy)."""
    # beta holds beta_0..beta_{N-1}; the top polynomial only ever enters
    # through the scale-free Newton ratio, so its normalizer is arbitrary
    sq = np.sqrt(np.append(np.array(beta), 1.0))
    p_prev = np.zeros_like(x)
    p_cur = np.full_like(x, 1.0 / sq[0])
    d_prev = np.zeros_like(x)
    d_cur = np.zeros_like(x)
    values = [p_cur.copy()]
    derivs = [d_cur.copy()]
    for m in range(upto):
        p_next = ((x - alpha[m]) * p_cur - (sq[m] if m > 0 else 0.0)
                  * p_prev) / sq[m + 1]
        d_next = (p_cur + (x - alpha[m]) * d_cur - (sq[m] if m > 0 else 0.0)
                  * d_prev) / sq[m + 1]
        p_prev, p_cur = p_cur, p_next
        d_prev, d_cur = d_cur, d_next
        values.append(p_cur.copy())
        derivs.append(d_cur.copy())
    return values, derivs


@lru_cache(maxsize=64)
def _rule_arrays(count: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
    from scipy.linalg import eigh_tridiagonal

    alpha, beta = _recurrence(count)
    if count == 1:
        return (alpha[0],), (beta[0],)
    # Golub-Welsch eigenvalues locate the nodes; two Newton corrections on
    # the top orthonormal polynomial polish them, and the Christoffel sum
    # gives every weight with full relative accuracy (the raw first
    # eigenvector components lose it for the exponentially small outer
    # weights).
    sqbeta = np.sqrt(np.array(beta[1:]))
    nodes = eigh_tridiagonal(np.array(alpha), sqbeta,
                             eigvals_only=True)
    nodes = np.sort(nodes)
    for _ in range(2):
        values, derivs = _orthonormal_values(nodes, alpha, beta, count)
        step = values[count] / derivs[count]
        nodes = nodes - step
    values, _ = _orthonormal_values(nodes, alpha, beta, count - 1)
    weights = 1.0 / np.sum(np.square(values), axis=0)
    return tuple(nodes), tuple(weights)


@lru_cache(maxsize=64)
def _rule_unchecked(count: int) -> QuadratureRule:
    nodes = np.array(_rule_arrays(count)[0])
    weights = np.array(_rule_arrays(count)[1])
    for arr in (nodes, weights):
        arr.setflags(write=False)
    rule = QuadratureRule(nodes=nodes, weights=weights, count=count)
    rule.log_weights.setflags(write=False)
    return rule


def build_quadrature(count: int) -> QuadratureRule:
    """Build the count-point half-range rule.  count must be in [1, 64]."""
    if not isinstance(count, (int, np.integer)) or isinstance(count, bool):
        raise ConfigError(f"quadrature count must be an integer, got {count!r}")
    if not 1 <= count <= MAX_PUBLIC_COUNT:
        raise ConfigError(
            f"quadrature count must be in [1, {MAX_PUBLIC_COUNT}], got {count}")
    return _rule_unchecked(int(count))
