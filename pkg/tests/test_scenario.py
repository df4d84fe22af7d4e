import pytest

from coopmac import (ConfigError, Scenario, SweepSpec, emit_scenario,
                     parse_scenario, parse_scenario_text)


class TestDefaults:
    def test_empty_document_gives_reference_parameters(self):
        s = parse_scenario_text("")
        assert s.payload_bytes == 1500
        assert s.cw_min == 32
        assert s.slot_us == 20.0
        assert s.timeout_us == 80.0
        assert s.sifs_us == 10.0
        assert s.difs_us == 50.0
        assert s.mac_header_bytes == 34
        assert s.phy_header_us == 96.0
        assert s.data_rate_bps == 54e6
        assert s.ctrl_rate_bps == 6e6
        assert s.gamma_star_db == 16.14
        assert s.p_tx_mw == 1900.0
        assert s.p_rx_mw == 1340.0
        assert s.p_idle_mw == 1340.0
        assert s.mu_ab_db == 8.0

    def test_sigma_ab_follows_relay_sigma(self):
        s = parse_scenario_text("sigma_ar_db = 7.5")
        assert s.effective_sigma_ab() == 7.5
        s2 = parse_scenario_text("sigma_ar_db = 7.5\nsigma_ab_db = 1.0")
        assert s2.effective_sigma_ab() == 1.0


class TestParsing:
    def test_domain_error_names_key(self):
        with pytest.raises(ConfigError, match="rho1"):
            parse_scenario_text("rho1 = 1.5")

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_scenario_text("bogus_key = 3")

    def test_malformed_value_names_key_and_line(self):
        with pytest.raises(ConfigError, match="line 2.*slot_us"):
            parse_scenario_text("n = 2\nslot_us = fast")

    def test_homogeneous_broadcast(self):
        s = parse_scenario_text("n = 3, mu_ar_db = 15")
        assert s.n == 3
        assert s.mu_ar_db == (15.0, 15.0, 15.0)
        assert s.mu_br_db == (20.0, 20.0, 20.0)

    def test_per_relay_override_array(self):
        s = parse_scenario_text("n = 3\nmu_ar_db = 15,18,21")
        assert s.mu_ar_db == (15.0, 18.0, 21.0)

    def test_wrong_array_length_rejected(self):
        with pytest.raises(ConfigError, match="mu_ar_db"):
            parse_scenario_text("n = 3\nmu_ar_db = 15,18")

    def test_rho_shorthand_sets_both_sides(self):
        s = parse_scenario_text("rho = 0.4")
        assert s.rho1 == 0.4 and s.rho2 == 0.4

    def test_rho_conflict_rejected(self):
        with pytest.raises(ConfigError, match="rho"):
            parse_scenario_text("rho = 0.4\nrho1 = 0.2")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_scenario_text("n = 2\nn = 3")

    def test_comments_and_blank_lines(self):
        s = parse_scenario_text("# comment\n\nn = 2  # trailing\n")
        assert s.n == 2

    def test_negative_sigma_rejected(self):
        with pytest.raises(ConfigError, match="sigma_ar_db"):
            parse_scenario_text("sigma_ar_db = -1")

    def test_missing_file_rejected(self):
        with pytest.raises(ConfigError, match="no such"):
            parse_scenario("/nonexistent/scenario.conf")

    def test_inline_text_accepted(self):
        s = parse_scenario("n = 2, rho = 0.3")
        assert s.n == 2 and s.rho1 == 0.3


class TestRoundTrip:
    def test_default_round_trip(self):
        s = Scenario()
        assert parse_scenario_text(emit_scenario(s)) == s

    def test_heterogeneous_round_trip(self):
        s = parse_scenario_text(
            "n = 3\nmu_ar_db = 15,18.5,21\nsigma_br_db = 1,2,3\n"
            "rho1 = 0.25\nrho2 = 0.7\nsigma_ab_db = 4.5\nseed = 17\n"
            "rounds = 5000")
        assert parse_scenario_text(emit_scenario(s)) == s

    def test_emitted_floats_survive_exactly(self):
        s = parse_scenario_text("gamma_star_db = 16.139999999999999")
        again = parse_scenario_text(emit_scenario(s))
        assert again.gamma_star_db == s.gamma_star_db


class TestSweep:
    def test_axis_domain_checked(self):
        with pytest.raises(ConfigError):
            SweepSpec(axis="rho", values=(0.5, 1.2))
        with pytest.raises(ConfigError):
            SweepSpec(axis="sigma", values=(-1.0,))
        with pytest.raises(ConfigError):
            SweepSpec(axis="volume", values=(1,))
        with pytest.raises(ConfigError):
            SweepSpec(axis="n", values=())

    def test_rho_sweep_generates_points(self):
        spec = SweepSpec(axis="rho", values=(0.0, 0.5))
        pts = list(spec.scenarios())
        assert pts[0][1].rho1 == 0.0
        assert pts[1][1].rho1 == 0.5 and pts[1][1].rho2 == 0.5

    def test_n_sweep_stretches_links(self):
        spec = SweepSpec(axis="n", values=(1, 4))
        pts = dict(spec.scenarios())
        assert pts[4].n == 4
        assert pts[4].mu_ar_db == (20.0,) * 4

    def test_n_sweep_requires_homogeneous_base(self):
        base = parse_scenario_text("n = 2\nmu_ar_db = 15,20")
        spec = SweepSpec(axis="n", values=(3,), fixed=base)
        with pytest.raises(ConfigError, match="homogeneous"):
            list(spec.scenarios())

    def test_sigma_sweep_touches_both_sides(self):
        spec = SweepSpec(axis="sigma", values=(4.0,))
        (_, pt), = spec.scenarios()
        assert pt.sigma_ar_db == (4.0,)
        assert pt.sigma_br_db == (4.0,)
