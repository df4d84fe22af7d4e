import numpy as np
import pytest

from coopmac import (ConfigError, FrameTimes, MacProfile, PowerProfile,
                     audit_round_energy, build_quadrature,
                     expected_active_closed_form, homogeneous_config,
                     network_active_distribution, outage_probability,
                     run_round, run_simulation)

MAC = MacProfile()
POWER = PowerProfile()
FT = FrameTimes.from_profile(MAC)


def expected_round_time(outcome, mac=MAC):
    ft = FrameTimes.from_profile(mac)
    t = ft.t_data_us
    if outcome.direct_success:
        return t
    t += ft.t_def_us
    if outcome.outage:
        return t + mac.timeout_us
    t += (outcome.idle_slots * mac.slot_us
          + outcome.collisions * ft.t_col_us)
    t += (mac.t_onc_us + mac.difs_us + ft.t_data_us + 2 * mac.sifs_us
          + 2 * ft.t_ctrl_us)
    return t


class TestDeterminism:
    def test_same_seed_bitwise_identical(self):
        config = homogeneous_config(3, 20.0, 2.0, 0.5)
        a = run_simulation(config, MAC, POWER, rounds=20_000, seed=99)
        b = run_simulation(config, MAC, POWER, rounds=20_000, seed=99)
        assert a.total_time_us == b.total_time_us
        assert a.total_energy_mj == b.total_energy_mj
        assert a.delivered_bits == b.delivered_bits
        assert a.idle_slots == b.idle_slots

    @pytest.mark.parametrize("workers", [2, 4])
    def test_worker_count_invariance(self, workers):
        config = homogeneous_config(2, 20.0, 2.0, 0.0)
        ref = run_simulation(config, MAC, POWER, rounds=10_000, seed=5)
        par = run_simulation(config, MAC, POWER, rounds=10_000, seed=5,
                             workers=workers)
        assert par.total_time_us == ref.total_time_us
        assert par.total_energy_mj == ref.total_energy_mj
        assert par.delivered_bits == ref.delivered_bits
        assert par.collisions == ref.collisions

    def test_single_round_metrics_consistent(self):
        config = homogeneous_config(2, 20.0, 2.0, 0.0)
        m = run_simulation(config, MAC, POWER, rounds=1, seed=3,
                           collect_outcomes=True)
        assert m.rounds == 1
        (outcome,) = m.outcomes
        assert m.total_time_us == outcome.round_time_us
        assert m.delivered_bits == outcome.delivered_bits


class TestDegenerateChannels:
    def test_strong_direct_link_always_direct(self):
        config = homogeneous_config(2, 20.0, 0.0, 0.0, mu_ab_db=30.0,
                                    sigma_ab_db=0.0)
        m = run_simulation(config, MAC, POWER, rounds=500, seed=1,
                           collect_outcomes=True)
        assert m.direct_successes == 500
        assert m.total_time_us == pytest.approx(500 * FT.t_data_us)
        assert all(o.delivered_bits == 8 * MAC.payload_bytes
                   for o in m.outcomes)

    def test_failed_direct_single_relay_never_collides(self):
        config = homogeneous_config(1, 25.0, 0.0, 0.0, mu_ab_db=5.0,
                                    sigma_ab_db=0.0)
        m = run_simulation(config, MAC, POWER, rounds=2_000, seed=2,
                           collect_outcomes=True)
        assert m.coop_attempts == 2_000
        assert m.outages == 0
        assert m.collisions == 0
        assert all(o.delivered_bits == 2 * 8 * MAC.payload_bytes
                   for o in m.outcomes)
        # idle slots follow the uniform backoff draw over [0, 31]
        mean_idle = m.idle_slots / m.rounds
        assert mean_idle == pytest.approx(15.5, abs=0.6)

    def test_guaranteed_outage(self):
        config = homogeneous_config(2, 5.0, 0.0, 0.0, mu_ab_db=5.0,
                                    sigma_ab_db=0.0)
        m = run_simulation(config, MAC, POWER, rounds=300, seed=3,
                           collect_outcomes=True)
        assert m.outages == 300
        for o in m.outcomes:
            assert o.delivered_bits == 0
            assert o.idle_slots == 0 and o.collisions == 0
            assert o.round_time_us == pytest.approx(
                FT.t_data_us + FT.t_def_us + MAC.timeout_us)


class TestInvariants:
    def test_round_outcome_invariants(self):
        config = homogeneous_config(3, 17.0, 6.0, 0.4)
        m = run_simulation(config, MAC, POWER, rounds=4_000, seed=11,
                           collect_outcomes=True)
        payload_bits = 8 * MAC.payload_bytes
        for o in m.outcomes:
            if o.direct_success:
                assert o.delivered_bits == payload_bits
                assert not o.outage
            if o.outage:
                assert o.delivered_bits == 0
                assert o.idle_slots == 0 and o.collisions == 0
            if not o.direct_success and not o.outage:
                assert o.delivered_bits == 2 * payload_bits
                assert o.active_mask.hamming_weight >= 1

    def test_time_accounting_closes(self):
        config = homogeneous_config(4, 16.0, 8.0, 0.6)
        m = run_simulation(config, MAC, POWER, rounds=3_000, seed=12,
                           collect_outcomes=True)
        for o in m.outcomes:
            assert o.round_time_us == pytest.approx(expected_round_time(o),
                                                    rel=1e-12)

    def test_energy_audit_on_sample(self):
        config = homogeneous_config(4, 16.0, 8.0, 0.6)
        m = run_simulation(config, MAC, POWER, rounds=10_000, seed=13,
                           collect_outcomes=True)
        rng = np.random.default_rng(0)
        sample = rng.choice(len(m.outcomes), size=100, replace=False)
        for i in sample:
            o = m.outcomes[i]
            audited = audit_round_energy(o, config, MAC, POWER)
            assert o.round_energy_mj == pytest.approx(audited, rel=1e-9)

    def test_energy_totals_match_outcome_sum(self):
        config = homogeneous_config(2, 18.0, 5.0, 0.2)
        m = run_simulation(config, MAC, POWER, rounds=2_000, seed=14,
                           collect_outcomes=True)
        assert m.total_energy_mj == pytest.approx(
            sum(o.round_energy_mj for o in m.outcomes), rel=1e-12)


class TestAgainstAnalytics:
    def test_outage_rate_matches_analytic(self, rule15):
        config = homogeneous_config(3, 20.0, 5.0, 0.5)
        m = run_simulation(config, MAC, POWER, rounds=200_000, seed=21)
        p_out = outage_probability(network_active_distribution(config,
                                                               rule15))
        assert abs(m.outage_rate - p_out) < 3 * m.stderr_outage_rate + 1e-9

    def test_outage_rate_high_correlation(self, rule15):
        config = homogeneous_config(5, 20.0, 10.0, 0.99)
        m = run_simulation(config, MAC, POWER, rounds=300_000, seed=22)
        p_out = outage_probability(network_active_distribution(config,
                                                               rule15))
        assert abs(m.outage_rate - p_out) < 3 * m.stderr_outage_rate + 5e-5

    @pytest.mark.parametrize("rho", [0.0, 0.5, 0.99])
    @pytest.mark.parametrize("sigma", [2.0, 10.0])
    def test_mean_active_matches_closed_form(self, rho, sigma):
        config = homogeneous_config(4, 20.0, sigma, rho)
        m = run_simulation(config, MAC, POWER, rounds=150_000, seed=23)
        expected = expected_active_closed_form(config)
        assert abs(m.mean_active - expected) < 3 * m.stderr_mean_active

    def test_throughput_ordering_in_n(self):
        results = []
        for n in (1, 2, 5):
            config = homogeneous_config(n, 20.0, 2.0, 0.0)
            m = run_simulation(config, MAC, POWER, rounds=150_000, seed=31)
            results.append((m.throughput_bps, m.stderr_throughput_bps))
        for (lo, se_lo), (hi, se_hi) in zip(results, results[1:]):
            assert hi >= lo - 3 * (se_lo + se_hi)

    def test_mean_contention_matches_analytic_single_relay(self):
        config = homogeneous_config(1, 25.0, 0.0, 0.0, mu_ab_db=5.0,
                                    sigma_ab_db=0.0)
        m = run_simulation(config, MAC, POWER, rounds=100_000, seed=32)
        assert m.mean_contention_us == pytest.approx(310.0, rel=0.02)


class TestApi:
    def test_run_round_shape(self, rng):
        config = homogeneous_config(2, 18.0, 4.0, 0.3)
        outcome = run_round(config, MAC, POWER, rng)
        assert outcome.round_time_us > 0
        assert outcome.round_energy_mj > 0
        assert outcome.active_mask.width == 2

    def test_bad_rounds_rejected(self):
        config = homogeneous_config(1, 20.0, 2.0, 0.0)
        with pytest.raises(ConfigError):
            run_simulation(config, MAC, POWER, rounds=0, seed=1)

    def test_too_many_relays_rejected(self):
        config = homogeneous_config(65, 20.0, 2.0, 0.0)
        with pytest.raises(ConfigError):
            run_simulation(config, MAC, POWER, rounds=10, seed=1)
