"""Exponentially correlated log-normal shadowing.

Per-link average received power (dB) is normal with per-link mean/std;
links sharing an end node are correlated with factor rho^|i-j| (a
symmetric Toeplitz / Kac-Murdock-Szego structure).  The KMS matrix has
closed forms for its inverse (tridiagonal), determinant and Cholesky
factor, which this module uses instead of dense linear algebra; dense
matrices are only materialized for cross-checks in the test suite.

All dB quantities stay in dB throughout; nothing here converts to
linear scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import ConfigError, NumericError

RHO_MAX = 1.0 - 1e-6


def q_gauss(z):
    """Standard Gaussian upper-tail Q(z)."""
    return ndtr(-np.asarray(z, dtype=float))


@dataclass(frozen=True)
class LinkStat:
    """Shadowing statistics of one link: mean and std of the average
    received power in dB."""

    mu_db: float
    sigma_db: float

    def __post_init__(self):
        if not math.isfinite(self.mu_db):
            raise ConfigError(f"mu_db must be finite, got {self.mu_db}")
        if not (math.isfinite(self.sigma_db) and self.sigma_db >= 0):
            raise ConfigError(f"sigma_db must be >= 0, got {self.sigma_db}")


@dataclass(frozen=True)
class KmsMatrix:
    """Correlation matrix with entries rho^|i-j|, never materialized on the
    runtime paths."""

    n: int
    rho: float

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"KMS dimension must be >= 1, got {self.n}")
        if not 0.0 <= self.rho < 1.0:
            raise ConfigError(f"rho must be in [0, 1), got {self.rho}")
        if self.rho >= RHO_MAX:
            raise NumericError(
                f"rho={self.rho} is too close to 1 (matrix nearly singular); "
                f"the supported range is [0, {RHO_MAX})")


def dense_kms(m: KmsMatrix) -> np.ndarray:
    """Dense rho^|i-j| matrix.  Intended for tests and small n only."""
    idx = np.arange(m.n)
    return m.rho ** np.abs(idx[:, None] - idx[None, :])


def kms_inverse(m: KmsMatrix) -> np.ndarray:
    """Closed-form tridiagonal inverse: corners 1/(1-rho^2), interior
    diagonal (1+rho^2)/(1-rho^2), off-diagonals -rho/(1-rho^2)."""
    n, rho = m.n, m.rho
    if n == 1:
        return np.array([[1.0]])
    om = 1.0 - rho * rho
    inv = np.zeros((n, n))
    di = np.arange(n)
    inv[di, di] = (1.0 + rho * rho) / om
    inv[0, 0] = inv[n - 1, n - 1] = 1.0 / om
    inv[di[:-1], di[:-1] + 1] = -rho / om
    inv[di[:-1] + 1, di[:-1]] = -rho / om
    return inv


def kms_determinant(m: KmsMatrix) -> float:
    """det = (1 - rho^2)^(n-1)."""
    return (1.0 - m.rho * m.rho) ** (m.n - 1)


def kms_factor(m: KmsMatrix) -> np.ndarray:
    """Lower-triangular L with L L^T = KMS(rho).

    The AR(1) structure gives the factor in closed form: row i is
    rho^(i-j) * sqrt(1-rho^2) * rho^... equivalently L[i,j] =
    rho^(i-j) * c_j with c_0 = 1, c_j = sqrt(1-rho^2) for j >= 1.
    """
    n, rho = m.n, m.rho
    L = np.zeros((n, n))
    col_scale = np.full(n, math.sqrt(1.0 - rho * rho))
    col_scale[0] = 1.0
    for j in range(n):
        L[j:, j] = col_scale[j] * rho ** np.arange(n - j)
    return L


def sample_correlated_gains(stats: list[LinkStat], rho: float,
                            rng: np.random.Generator) -> np.ndarray:
    """One draw of the correlated per-link gains (dB): sigma * L X + mu."""
    if not stats:
        raise ConfigError("stats must be nonempty")
    n = len(stats)
    L = kms_factor(KmsMatrix(n=n, rho=rho))
    x = rng.standard_normal(n)
    sigma = np.array([s.sigma_db for s in stats])
    mu = np.array([s.mu_db for s in stats])
    return mu + sigma * (L @ x)


def sample_pair_common_factor(s1: LinkStat, s2: LinkStat, rho: float,
                              rng: np.random.Generator) -> tuple[float, float]:
    """Two-link common-factor construction:

        g_i = sigma_i (sqrt(1-rho^2) X_i + rho X0) + mu_i.

    Marginals are N(mu_i, sigma_i^2); the pairwise correlation is rho^2
    (the shared factor enters both links with weight rho), which differs
    from the rho of the KMS construction for adjacent links.  Both
    constructions are kept and each is tested against its own covariance.
    """
    if not 0.0 <= rho < 1.0:
        raise ConfigError(f"rho must be in [0, 1), got {rho}")
    x0 = rng.standard_normal()
    x1 = rng.standard_normal()
    x2 = rng.standard_normal()
    c = math.sqrt(1.0 - rho * rho)
    g1 = s1.sigma_db * (c * x1 + rho * x0) + s1.mu_db
    g2 = s2.sigma_db * (c * x2 + rho * x0) + s2.mu_db
    return g1, g2


def oper(link: LinkStat, gamma_star_db: float) -> float:
    """Outage packet error rate: P(gain <= gamma*) = 1 - Q((gamma*-mu)/sigma).

    sigma = 0 degenerates to a step: 0 if mu > gamma*, else 1.
    """
    if link.sigma_db == 0.0:
        return 0.0 if link.mu_db > gamma_star_db else 1.0
    return float(1.0 - q_gauss((gamma_star_db - link.mu_db) / link.sigma_db))


@dataclass(frozen=True)
class NetworkConfig:
    """Topology: n relays with A-side and B-side link statistics, the
    direct A-B link, per-side correlation factors and the reliability
    threshold (dB)."""

    n: int
    rho1: float
    rho2: float
    ar_links: tuple[LinkStat, ...]
    br_links: tuple[LinkStat, ...]
    ab_link: LinkStat
    gamma_star_db: float

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        for name, rho in (("rho1", self.rho1), ("rho2", self.rho2)):
            if not 0.0 <= rho < 1.0:
                raise ConfigError(f"{name} must be in [0, 1), got {rho}")
            if rho >= RHO_MAX:
                raise NumericError(
                    f"{name}={rho} too close to 1; supported range is "
                    f"[0, {RHO_MAX})")
        object.__setattr__(self, "ar_links", tuple(self.ar_links))
        object.__setattr__(self, "br_links", tuple(self.br_links))
        if len(self.ar_links) != self.n or len(self.br_links) != self.n:
            raise ConfigError(
                f"link lists must have length n={self.n} "
                f"(got {len(self.ar_links)} A-side, {len(self.br_links)} B-side)")
        if not math.isfinite(self.gamma_star_db):
            raise ConfigError("gamma_star_db must be finite")


def homogeneous_config(n: int, mu_relay_db: float, sigma_relay_db: float,
                       rho: float, mu_ab_db: float = 8.0,
                       sigma_ab_db: float | None = None,
                       gamma_star_db: float = 16.14) -> NetworkConfig:
    """Convenience builder for the symmetric topology used throughout the
    experiment recipes: identical relay links both sides, rho1 = rho2."""
    link = LinkStat(mu_db=mu_relay_db, sigma_db=sigma_relay_db)
    ab = LinkStat(mu_db=mu_ab_db,
                  sigma_db=sigma_relay_db if sigma_ab_db is None else sigma_ab_db)
    return NetworkConfig(n=n, rho1=rho, rho2=rho,
                         ar_links=(link,) * n, br_links=(link,) * n,
                         ab_link=ab, gamma_star_db=gamma_star_db)
