"""End-to-end analytic evaluation of a scenario: per-link outage, codeword
distributions for both sides, active-set statistics, then the MAC-layer
throughput and energy report."""
from __future__ import annotations

from .macmodel import AnalyticReport, analyze
from .quadrature import build_quadrature
from .relayset import (expected_active_closed_form,
                       expected_active_from_distribution,
                       network_active_distribution, outage_probability)
from .scenario import Scenario
from .shadowing import oper


def analytic_report(scenario: Scenario,
                    coop_denominator: str = "unconditional"
                    ) -> AnalyticReport:
    config = scenario.network_config()
    rule = build_quadrature(scenario.quadrature_n)
    dist = network_active_distribution(config, rule,
                                       enumeration_cap=scenario.enum_cap)
    p_out = outage_probability(dist)
    e_active = expected_active_from_distribution(dist)
    oper_ab = oper(config.ab_link, config.gamma_star_db)
    return analyze(oper_ab, p_out, e_active, config.n,
                   scenario.mac_profile(), scenario.power_profile(),
                   coop_denominator=coop_denominator)


def closed_form_mean_active(scenario: Scenario) -> float:
    return expected_active_closed_form(scenario.network_config())
