"""coopmac: cross-layer analysis of a network-coded cooperative ARQ MAC
under exponentially correlated log-normal shadowing.

Closed-form and quadrature-based PHY statistics (per-link outage,
reception-codeword probabilities, active-relay-set distribution), a DCF
throughput/energy model on top of them, and an independent packet-level
Monte Carlo simulator to validate every analytical quantity.
"""
from ._core import backend_name
from .errors import ConfigError, CoopmacError, NumericError, ValidationError
from .macmodel import (AnalyticReport, FrameTimes, MacProfile, PowerProfile,
                       analyze, contention_probs, expected_colliders,
                       expected_contention_time, tau_fixed_point, throughput)
from .orthant import (RelayMask, codeword_distribution, codeword_probability,
                      codeword_probability_mc, q1_eval, qk_step)
from .pipeline import analytic_report, closed_form_mean_active
from .quadrature import QuadratureRule, build_quadrature, half_gauss_moment
from .relayset import (RelaySetDistribution, active_set_distribution,
                       expected_active_closed_form,
                       expected_active_from_distribution, lemma1_residual,
                       network_active_distribution, outage_probability)
from .scenario import (Scenario, SweepSpec, emit_scenario, load_scenario,
                       parse_scenario, parse_scenario_text)
from .shadowing import (KmsMatrix, LinkStat, NetworkConfig, dense_kms,
                        homogeneous_config, kms_determinant, kms_factor,
                        kms_inverse, oper, sample_correlated_gains,
                        sample_pair_common_factor)
from .simulator import (RoundOutcome, SimMetrics, audit_round_energy,
                        run_round, run_simulation)

__version__ = "0.1.0"

__all__ = [
    "AnalyticReport", "ConfigError", "CoopmacError", "FrameTimes",
    "KmsMatrix", "LinkStat", "MacProfile", "NetworkConfig", "NumericError",
    "PowerProfile", "QuadratureRule", "RelayMask", "RelaySetDistribution",
    "RoundOutcome", "Scenario", "SimMetrics", "SweepSpec",
    "ValidationError", "active_set_distribution", "analytic_report",
    "analyze", "audit_round_energy", "backend_name", "build_quadrature",
    "closed_form_mean_active", "codeword_distribution",
    "codeword_probability", "codeword_probability_mc", "contention_probs",
    "dense_kms", "emit_scenario", "expected_active_closed_form",
    "expected_active_from_distribution", "expected_colliders",
    "expected_contention_time", "half_gauss_moment", "homogeneous_config",
    "kms_determinant", "kms_factor", "kms_inverse", "lemma1_residual",
    "load_scenario", "network_active_distribution", "oper",
    "outage_probability", "parse_scenario", "parse_scenario_text",
    "q1_eval", "qk_step", "run_round", "run_simulation",
    "sample_correlated_gains", "sample_pair_common_factor",
    "tau_fixed_point", "throughput",
]
