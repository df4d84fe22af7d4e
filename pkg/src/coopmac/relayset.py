"""Active relay set statistics.

Combines the A-side and B-side codeword distributions into the
distribution of the active-set size (relays that decoded both packets),
the network outage probability (empty active set), and the expected
active-set size.  The expectation also has a correlation-independent
closed form, sum_i Q(t_Ai) Q(t_Bi), which the tests pit against the
distribution-derived mean at several correlation factors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr

from .errors import ConfigError, NumericError
from .orthant import codeword_distribution
from .quadrature import QuadratureRule, build_quadrature
from .shadowing import NetworkConfig

SUM_TOL = 1e-6


@dataclass(frozen=True)
class RelaySetDistribution:
    """probs[k] = Pr{exactly k active relays}, k = 0..n."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", probs)
        if probs.ndim != 1 or probs.size < 1:
            raise ConfigError("probs must be a nonempty 1-D array")
        if probs.min() < -1e-9 or probs.max() > 1.0 + 1e-9:
            raise NumericError(
                f"active-set probabilities out of [0,1]: "
                f"[{probs.min()}, {probs.max()}]")
        if abs(probs.sum() - 1.0) > SUM_TOL:
            raise NumericError(
                f"active-set distribution sums to {probs.sum()}, not 1")

    @property
    def n(self) -> int:
        return self.probs.size - 1


def active_set_distribution(dist_a, dist_b) -> RelaySetDistribution:
    """Combine per-side codeword distributions: probs[k] sums
    Pr{A-mask} Pr{B-mask} over mask pairs whose AND has Hamming weight k.
    A-side and B-side events are independent, so the pair probability is
    the plain product.
    """
    pa = np.asarray(dist_a, dtype=float)
    pb = np.asarray(dist_b, dtype=float)
    if pa.shape != pb.shape:
        raise ConfigError(
            f"side distributions differ in width: {pa.shape} vs {pb.shape}")
    size = pa.size
    n = size.bit_length() - 1
    if size != 1 << n:
        raise ConfigError(f"distribution length {size} is not a power of two")
    for name, d in (("A", pa), ("B", pb)):
        if abs(d.sum() - 1.0) > SUM_TOL:
            raise ConfigError(
                f"{name}-side distribution sums to {d.sum()}, not 1")
    popcount = np.array([m.bit_count() for m in range(size)], dtype=np.int64)
    probs = np.zeros(n + 1)
    all_masks = np.arange(size)
    for a_mask in range(size):
        if pa[a_mask] == 0.0:
            continue
        k = popcount[a_mask & all_masks]
        probs += pa[a_mask] * np.bincount(k, weights=pb, minlength=n + 1)
    return RelaySetDistribution(probs=probs)


def outage_probability(dist: RelaySetDistribution) -> float:
    """Probability of an empty active set."""
    return float(dist.probs[0])


def expected_active_from_distribution(dist: RelaySetDistribution) -> float:
    return float(np.sum(np.arange(dist.n + 1) * dist.probs))


def expected_active_closed_form(config: NetworkConfig) -> float:
    """sum_i Q((gamma*-mu_ARi)/sigma_ARi) Q((gamma*-mu_BRi)/sigma_BRi);
    independent of the correlation factors.  sigma=0 links contribute
    their deterministic indicator."""
    total = 0.0
    for a, b in zip(config.ar_links, config.br_links):
        qa = (1.0 if a.mu_db > config.gamma_star_db else 0.0) \
            if a.sigma_db == 0.0 else \
            float(ndtr(-(config.gamma_star_db - a.mu_db) / a.sigma_db))
        qb = (1.0 if b.mu_db > config.gamma_star_db else 0.0) \
            if b.sigma_db == 0.0 else \
            float(ndtr(-(config.gamma_star_db - b.mu_db) / b.sigma_db))
        total += qa * qb
    return total


def network_active_distribution(config: NetworkConfig,
                                rule: QuadratureRule | None = None,
                                enumeration_cap: int | None = None
                                ) -> RelaySetDistribution:
    """Full pipeline: codeword distributions for both sides, combined."""
    rule = rule if rule is not None else build_quadrature(15)
    kwargs = {}
    if enumeration_cap is not None:
        kwargs["enumeration_cap"] = enumeration_cap
    dist_a = codeword_distribution(config.ar_links, config.rho1,
                                   config.gamma_star_db, rule, **kwargs)
    dist_b = codeword_distribution(config.br_links, config.rho2,
                                   config.gamma_star_db, rule, **kwargs)
    return active_set_distribution(dist_a, dist_b)


def lemma1_residual(gamma_star_db: float, mu: float, sigma: float,
                    rho: float) -> float:
    """Residual of the Gaussian-smoothing identity

        (1/sqrt(2 pi)) int Q((g*-mu-sigma sqrt(rho) t)/(sigma sqrt(1-rho)))
                           exp(-t^2/2) dt  =  Q((g*-mu)/sigma)

    computed by adaptive quadrature over t in [-10, 10].  The identity is
    exact, so the residual is an accuracy witness (< 1e-8 by contract).
    """
    if not 0.0 <= rho < 1.0:
        raise ConfigError(f"rho must be in [0, 1), got {rho}")
    if sigma <= 0:
        raise ConfigError(f"sigma must be > 0, got {sigma}")
    sq = math.sqrt(rho)
    sm = sigma * math.sqrt(1.0 - rho)

    def integrand(tt):
        return (ndtr(-(gamma_star_db - mu - sigma * sq * tt) / sm)
                * math.exp(-0.5 * tt * tt))

    val, _ = quad(integrand, -10.0, 10.0, limit=200, epsabs=1e-12,
                  epsrel=1e-12)
    val /= math.sqrt(2.0 * math.pi)
    return abs(val - float(ndtr(-(gamma_star_db - mu) / sigma)))
