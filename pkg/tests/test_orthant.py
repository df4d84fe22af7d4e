import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import dblquad, quad
from scipy.special import ndtr
from scipy.stats import multivariate_normal

from coopmac import (ConfigError, LinkStat, NumericError, RelayMask,
                     codeword_distribution, codeword_probability,
                     codeword_probability_mc, q1_eval, qk_step)
from conftest import links

GAMMA = 16.14


def rect_prob_reference(bits, t, rho):
    """Independent oracle: box probability via scipy's MVN integrator,
    with above-threshold components sign-flipped into упper bounds."""
    n = len(bits)
    idx = np.arange(n)
    dense = rho ** np.abs(idx[:, None] - idx[None, :])
    signs = np.array([-1.0 if b else 1.0 for b in bits])
    cov = dense * np.outer(signs, signs)
    upper = np.array([(-t[i] if b else t[i]) for i, b in enumerate(bits)])
    mvn = multivariate_normal(mean=np.zeros(n), cov=cov, seed=1234)
    return float(mvn.cdf(upper))


def chain_via_public_ops(bits, link_list, rho, rule, gamma=GAMMA):
    """Assemble Pr{codeword} from q1_eval / qk_step plus the final
    weighted sum, exactly as the documented evaluation order."""
    n = len(bits)
    om = 1.0 - rho * rho
    c_int = math.sqrt(2.0 * om / (1.0 + rho * rho))
    c_fin = math.sqrt(2.0 * om)
    t = np.array([(gamma - lk.mu_db) / lk.sigma_db for lk in link_list])
    sgn = [1.0 if b else -1.0 for b in bits]

    def stage_points(k):  # points demanded by stage k+1 (1-based k)
        scale = c_fin if (k + 1) == n else c_int
        return t[k] + sgn[k] * scale * rule.nodes

    values = np.array([q1_eval(x, bits[0], link_list[0], gamma, rho)
                       for x in stage_points(1)])
    for k in range(2, n):
        values = qk_step(values, k, bits[k - 1], stage_points(k), rule,
                         link_list[k - 1], gamma, rho)
    c0 = (1.0 - rho * rho) ** (-(n - 1) / 2.0) \
        * (2.0 * math.pi) ** (-n / 2.0)
    expo = np.exp(-(t[n - 1] ** 2 + sgn[n - 1] * 2.0 * c_fin * t[n - 1]
                    * rule.nodes) / (2.0 * om))
    return c0 * c_fin * float(np.sum(rule.weights * expo * values))


class TestQ1:
    def test_rho_zero_above_branch(self):
        link = LinkStat(12.0, 4.0)
        t = (GAMMA - 12.0) / 4.0
        expected = math.sqrt(2 * math.pi) * ndtr(-t)
        assert q1_eval(0.3, 1, link, GAMMA, 0.0) == pytest.approx(
            expected, rel=1e-12)

    def test_rho_zero_below_branch_is_complement(self):
        link = LinkStat(12.0, 4.0)
        t = (GAMMA - 12.0) / 4.0
        expected = math.sqrt(2 * math.pi) * (1.0 - ndtr(-t))
        assert q1_eval(-0.7, 0, link, GAMMA, 0.0) == pytest.approx(
            expected, rel=1e-12)

    def test_matches_defining_integral(self):
        # q1(x) = int exp(-(y^2 - 2 rho y x) / (2(1-rho^2))) dy over the
        # event region; adaptive quadrature as the oracle
        rho, x = 0.5, 1.0
        mu, sigma = GAMMA - 0.3 * 2.0, 2.0   # t = 0.3
        link = LinkStat(mu, sigma)
        om = 1.0 - rho * rho

        def integrand(y):
            return math.exp(-(y * y - 2.0 * rho * y * x) / (2.0 * om))

        ref, _ = quad(integrand, 0.3, 40.0, epsabs=1e-13, epsrel=1e-13)
        assert q1_eval(x, 1, link, GAMMA, rho) == pytest.approx(ref, abs=1e-8)
        ref0, _ = quad(integrand, -40.0, 0.3, epsabs=1e-13, epsrel=1e-13)
        assert q1_eval(x, 0, link, GAMMA, rho) == pytest.approx(ref0,
                                                                abs=1e-8)


class TestQkStep:
    def test_rho_zero_factorizes(self, rule15):
        # each stage multiplies by sqrt(2 pi) * Q(t_k) (above branch),
        # independent of the evaluation point
        link = LinkStat(14.0, 5.0)
        t2 = (GAMMA - 14.0) / 5.0
        prev = np.full(rule15.count, 2.34)
        out = qk_step(prev, 2, 1, np.linspace(-2, 2, rule15.count), rule15,
                      link, GAMMA, 0.0)
        expected = 2.34 * math.sqrt(2 * math.pi) * ndtr(-t2)
        np.testing.assert_allclose(out, expected, rtol=1e-12)

    def test_n2_matches_bivariate_quadrature(self, rule15):
        rho = 0.7
        link_list = [LinkStat(14.0, 4.0), LinkStat(18.0, 3.0)]
        t = [(GAMMA - lk.mu_db) / lk.sigma_db for lk in link_list]
        om = 1.0 - rho * rho
        norm = 1.0 / (2.0 * math.pi * math.sqrt(om))

        def density(y2, y1):
            return norm * math.exp(-(y1 * y1 - 2 * rho * y1 * y2 + y2 * y2)
                                   / (2.0 * om))

        ref, err = dblquad(density, t[0], 12.0,
                           lambda _: t[1], lambda _: 12.0,
                           epsabs=1e-10, epsrel=1e-10)
        got = chain_via_public_ops([1, 1], link_list, rho, rule15)
        assert got == pytest.approx(ref, abs=1e-6)

    def test_n3_mixed_codeword_matches_mc(self, rule15):
        rho = 0.5
        link_list = links(17.0, 4.0, 3)
        bits = [1, 0, 1]
        got = chain_via_public_ops(bits, link_list, rho, rule15)
        mask = RelayMask(bits=0b101, width=3)
        est, se = codeword_probability_mc(mask, link_list, rho, GAMMA,
                                          1_000_000, seed=77)
        assert abs(got - est) < 3.0 * se + 1e-9

    def test_point_count_mismatch_rejected(self, rule15):
        with pytest.raises(ConfigError):
            qk_step(np.ones(7), 2, 1, np.zeros(15), rule15,
                    LinkStat(15.0, 2.0), GAMMA, 0.5)


class TestCodewordProbability:
    def test_n1_at_symmetric_point(self, rule15):
        p = codeword_probability(RelayMask(1, 1), [LinkStat(GAMMA, 3.0)],
                                 0.3, GAMMA, rule15)
        assert p == pytest.approx(0.5, rel=1e-12)

    def test_n2_rho_zero_is_product_of_tails(self, rule15):
        p = codeword_probability(RelayMask(0b11, 2), links(20.0, 5.0, 2),
                                 0.0, GAMMA, rule15)
        assert p == pytest.approx(0.60831074982464576, rel=1e-10)

    @pytest.mark.parametrize("mu,sigma,n", [(20.0, 5.0, 3), (13.0, 1.5, 4),
                                            (21.0, 2.0, 4)])
    def test_rho_zero_equals_marginal_product(self, rule15, mu, sigma, n):
        link_list = links(mu, sigma, n)
        t = (GAMMA - mu) / sigma
        for mask_bits in range(2 ** n):
            p = codeword_probability(RelayMask(mask_bits, n), link_list,
                                     0.0, GAMMA, rule15)
            exact = np.prod([ndtr(-t) if (mask_bits >> i) & 1 else ndtr(t)
                             for i in range(n)])
            assert abs(p - exact) < 1e-9

    def test_n4_rho08_matches_mc(self, rule15):
        link_list = links(15.0, 10.0, 4)
        mask = RelayMask(0b1010, 4)
        p = codeword_probability(mask, link_list, 0.8, GAMMA, rule15)
        est, se = codeword_probability_mc(mask, link_list, 0.8, GAMMA,
                                          1_000_000, seed=5)
        assert abs(p - est) < 3.0 * se + 1e-9

    @pytest.mark.parametrize("rho", [0.2, 0.5, 0.8, 0.88, 0.95, 0.99])
    def test_matches_scipy_reference(self, rule15, rho):
        t = np.array([0.57, -1.93, 1.2, -0.4])
        link_list = [LinkStat(GAMMA - ti * 2.0, 2.0) for ti in t]
        for bits in ([1, 1, 1, 1], [0, 1, 0, 1], [0, 0, 0, 0]):
            mask_bits = sum(b << i for i, b in enumerate(bits))
            p = codeword_probability(RelayMask(mask_bits, 4), link_list,
                                     rho, GAMMA, rule15)
            ref = rect_prob_reference(bits, t, rho)
            assert abs(p - ref) < 2e-5, (rho, bits)

    def test_tier_transition_is_smooth(self, rule15):
        # chain tier just below 0.905, grid tier just above: the two
        # evaluations of nearby problems should differ by o(drho)
        link_list = links(18.0, 6.0, 3)
        mask = RelayMask(0b011, 3)
        lo = codeword_probability(mask, link_list, 0.9049, GAMMA, rule15)
        hi = codeword_probability(mask, link_list, 0.9051, GAMMA, rule15)
        assert abs(hi - lo) < 5e-4

    def test_deterministic_links_split(self, rule15):
        # middle link has sigma=0 and mu above threshold: bit must be 1
        link_list = (LinkStat(18.0, 4.0), LinkStat(20.0, 0.0),
                     LinkStat(14.0, 6.0))
        p_ok = codeword_probability(RelayMask(0b111, 3), link_list, 0.6,
                                    GAMMA, rule15)
        p_bad = codeword_probability(RelayMask(0b101, 3), link_list, 0.6,
                                     GAMMA, rule15)
        assert p_bad == 0.0
        # removing the deterministic link leaves lag rho^2 between 1 and 3
        est, se = codeword_probability_mc(RelayMask(0b111, 3), link_list,
                                          0.6, GAMMA, 1_000_000, seed=9)
        assert abs(p_ok - est) < 3.0 * se + 1e-9

    def test_all_sigma_zero_degenerate(self, rule15):
        link_list = (LinkStat(20.0, 0.0), LinkStat(10.0, 0.0))
        assert codeword_probability(RelayMask(0b01, 2), link_list, 0.5,
                                    GAMMA, rule15) == 1.0
        assert codeword_probability(RelayMask(0b11, 2), link_list, 0.5,
                                    GAMMA, rule15) == 0.0

    def test_rho_one_rejected(self, rule15):
        with pytest.raises(NumericError):
            codeword_probability(RelayMask(1, 1), links(20, 2, 1),
                                 1.0 - 1e-9, GAMMA, rule15)

    def test_width_mismatch_rejected(self, rule15):
        with pytest.raises(ConfigError):
            codeword_probability(RelayMask(1, 2), links(20, 2, 3), 0.5,
                                 GAMMA, rule15)

    @given(mu=st.floats(13.0, 21.0), sigma=st.floats(1.5, 10.0),
           rho=st.floats(0.0, 0.85), bits=st.integers(0, 7))
    @settings(max_examples=40, deadline=None)
    def test_complement_symmetry(self, rule15, mu, sigma, rho, bits):
        # reflecting mu about gamma* and flipping every bit leaves the
        # probability unchanged
        n = 3
        fwd = codeword_probability(RelayMask(bits, n), links(mu, sigma, n),
                                   rho, GAMMA, rule15)
        mirrored = links(2 * GAMMA - mu, sigma, n)
        bwd = codeword_probability(RelayMask(bits ^ 0b111, n), mirrored,
                                   rho, GAMMA, rule15)
        assert abs(fwd - bwd) < 1e-9

    def test_all_ones_monotone_in_gamma_star(self, rule15):
        link_list = links(18.0, 4.0, 3)
        mask = RelayMask(0b111, 3)
        values = [codeword_probability(mask, link_list, 0.6, g, rule15)
                  for g in (10.0, 14.0, 16.14, 20.0, 24.0)]
        assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))


class TestCodewordDistribution:
    def test_n1_distribution(self, rule15):
        link = LinkStat(20.0, 5.0)
        dist = codeword_distribution([link], 0.0, GAMMA, rule15)
        t = (GAMMA - 20.0) / 5.0
        np.testing.assert_allclose(dist, [1.0 - ndtr(-t), ndtr(-t)],
                                   rtol=1e-12)

    def test_n3_rho_zero_products(self, rule15):
        link_list = links(17.0, 6.0, 3)
        t = (GAMMA - 17.0) / 6.0
        dist = codeword_distribution(link_list, 0.0, GAMMA, rule15)
        for mask_bits in range(8):
            exact = np.prod([ndtr(-t) if (mask_bits >> i) & 1 else ndtr(t)
                             for i in range(3)])
            assert dist[mask_bits] == pytest.approx(exact, abs=1e-12)

    @pytest.mark.parametrize("n", [2, 5, 8])
    @pytest.mark.parametrize("rho", [0.0, 0.5, 0.9])
    @pytest.mark.parametrize("mu,sigma", [(15.0, 2.0), (20.0, 2.0),
                                          (15.0, 10.0), (20.0, 10.0)])
    def test_partition_of_unity(self, rule15, n, rho, mu, sigma):
        dist = codeword_distribution(links(mu, sigma, n), rho, GAMMA, rule15)
        assert abs(dist.sum() - 1.0) < 1e-6
        assert dist.min() >= 0.0

    @pytest.mark.parametrize("rho", [0.95, 0.99])
    def test_partition_of_unity_grid_tier(self, rule15, rho):
        dist = codeword_distribution(links(20.0, 2.0, 5), rho, GAMMA, rule15)
        assert abs(dist.sum() - 1.0) < 1e-6

    def test_matches_per_mask_probabilities(self, rule15):
        link_list = links(18.0, 7.0, 4)
        for rho in (0.4, 0.95):
            dist = codeword_distribution(link_list, rho, GAMMA, rule15)
            for mask_bits in (0, 3, 10, 15):
                p = codeword_probability(RelayMask(mask_bits, 4), link_list,
                                         rho, GAMMA, rule15)
                assert dist[mask_bits] == pytest.approx(p, abs=1e-9)

    def test_deterministic_link_expansion(self, rule15):
        link_list = (LinkStat(18.0, 4.0), LinkStat(10.0, 0.0),
                     LinkStat(14.0, 6.0))
        dist = codeword_distribution(link_list, 0.7, GAMMA, rule15)
        assert abs(dist.sum() - 1.0) < 1e-9
        # any mask with bit 1 set is impossible (mu below threshold)
        for mask_bits in range(8):
            if (mask_bits >> 1) & 1:
                assert dist[mask_bits] == 0.0

    def test_enumeration_cap(self, rule15):
        with pytest.raises(ConfigError, match="cap"):
            codeword_distribution(links(20, 2, 13), 0.5, GAMMA, rule15)
        # raising the cap explicitly is allowed
        dist = codeword_distribution(links(20, 2, 13), 0.0, GAMMA, rule15,
                                     enumeration_cap=13)
        assert abs(dist.sum() - 1.0) < 1e-6


class TestMonteCarloOracle:
    def test_degenerate_all_above(self, rule15):
        link_list = (LinkStat(30.0, 0.0), LinkStat(25.0, 0.0))
        est, se = codeword_probability_mc(RelayMask(0b11, 2), link_list,
                                          0.5, GAMMA, 10_000, seed=3)
        assert est == 1.0 and se == 0.0

    def test_cross_validates_closed_product(self, rule15):
        est, se = codeword_probability_mc(RelayMask(0b11, 2),
                                          links(20.0, 5.0, 2), 0.0, GAMMA,
                                          1_000_000, seed=21)
        assert abs(est - 0.60831074982464576) < 3.0 * se

    def test_partition_over_all_masks(self):
        link_list = links(16.0, 6.0, 3)
        total = 0.0
        for mask_bits in range(8):
            est, _ = codeword_probability_mc(RelayMask(mask_bits, 3),
                                             link_list, 0.6, GAMMA,
                                             50_000, seed=mask_bits)
            assert 0.0 <= est <= 1.0
            total += est
        assert total == pytest.approx(1.0, abs=0.02)

    def test_small_sample_count_rejected(self):
        with pytest.raises(ConfigError):
            codeword_probability_mc(RelayMask(1, 1), links(20, 2, 1), 0.0,
                                    GAMMA, 100, seed=1)
