"""Command-line front end.

Subcommands: analytic | simulate | validate | sweep.  Output is CSV
(RFC-4180 style, header row mandatory, '.' decimal separator); plotting
is left to external tools.  Exit codes: 0 success, 2 configuration
error, 3 numerical error, 4 validation failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import asdict, replace

from .errors import ConfigError, CoopmacError, NumericError, ValidationError
from .macmodel import AnalyticReport
from .pipeline import analytic_report, closed_form_mean_active
from .scenario import (SWEEP_AXES, Scenario, SweepSpec, emit_scenario,
                       parse_scenario)
from .simulator import SimMetrics, run_simulation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VALIDATION = 4

SCENARIO_COLUMNS = ["n", "rho1", "rho2", "mu_ar_db", "sigma_ar_db",
                    "mu_br_db", "sigma_br_db", "mu_ab_db", "sigma_ab_db",
                    "gamma_star_db"]
SIM_COLUMNS = ["rounds", "seed", "throughput_bps", "eta_bits_per_joule",
               "outage_rate", "mean_active", "mean_contention_us",
               "stderr_throughput_bps", "stderr_outage_rate",
               "direct_successes", "coop_attempts", "outages",
               "coop_successes", "idle_slots", "collisions",
               "colliders_total"]


def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _fmt_axis(values: tuple) -> str:
    return ";".join(_fmt_value(v) for v in values) if len(set(values)) > 1 \
        else _fmt_value(values[0])


def _scenario_row(s: Scenario) -> dict:
    return {
        "n": s.n, "rho1": s.rho1, "rho2": s.rho2,
        "mu_ar_db": _fmt_axis(s.mu_ar_db),
        "sigma_ar_db": _fmt_axis(s.sigma_ar_db),
        "mu_br_db": _fmt_axis(s.mu_br_db),
        "sigma_br_db": _fmt_axis(s.sigma_br_db),
        "mu_ab_db": s.mu_ab_db, "sigma_ab_db": s.effective_sigma_ab(),
        "gamma_star_db": s.gamma_star_db,
    }


def _sim_row(s: Scenario, metrics: SimMetrics) -> dict:
    row = {"rounds": metrics.rounds, "seed": s.seed}
    for name in SIM_COLUMNS[2:]:
        row[name] = getattr(metrics, name)
    return row


def _write_csv(out, header, rows):
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt_value(row[h]) for h in header])


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _load(args) -> Scenario:
    scenario = parse_scenario(args.config) if args.config else Scenario()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.rounds is not None:
        overrides["rounds"] = args.rounds
    if args.quadrature is not None:
        overrides["quadrature_n"] = args.quadrature
    if args.workers is not None:
        overrides["workers"] = args.workers
    return replace(scenario, **overrides) if overrides else scenario


def cmd_analytic(args) -> int:
    scenario = _load(args)
    report = analytic_report(scenario)
    header = SCENARIO_COLUMNS + AnalyticReport.field_names()
    row = {**_scenario_row(scenario), **asdict(report)}
    out, close = _open_out(args.out)
    try:
        _write_csv(out, header, [row])
    finally:
        if close:
            out.close()
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario = _load(args)
    metrics = run_simulation(scenario.network_config(),
                             scenario.mac_profile(),
                             scenario.power_profile(),
                             rounds=scenario.rounds, seed=scenario.seed,
                             workers=scenario.workers)
    header = SCENARIO_COLUMNS + SIM_COLUMNS
    row = {**_scenario_row(scenario), **_sim_row(scenario, metrics)}
    out, close = _open_out(args.out)
    try:
        _write_csv(out, header, [row])
    finally:
        if close:
            out.close()
    return EXIT_OK


def cmd_sweep(args) -> int:
    scenario = _load(args)
    try:
        values = tuple(float(v) for v in args.values.split(","))
    except ValueError:
        raise ConfigError(f"malformed sweep values: {args.values!r}")
    spec = SweepSpec(axis=args.axis, values=values, fixed=scenario)
    ana_fields = AnalyticReport.field_names()
    header = ([args.axis] + SCENARIO_COLUMNS
              + [f"ana_{f}" for f in ana_fields]
              + [f"sim_{f}" for f in SIM_COLUMNS])
    rows = []
    for value, point in spec.scenarios():
        report = analytic_report(point)
        metrics = run_simulation(point.network_config(), point.mac_profile(),
                                 point.power_profile(), rounds=point.rounds,
                                 seed=point.seed, workers=point.workers)
        row = {args.axis: value, **_scenario_row(point)}
        row.update({f"ana_{k}": v for k, v in asdict(report).items()})
        row.update({f"sim_{k}": v
                    for k, v in _sim_row(point, metrics).items()})
        rows.append(row)
    out, close = _open_out(args.out)
    try:
        _write_csv(out, header, rows)
    finally:
        if close:
            out.close()
    return EXIT_OK


def cmd_emit(args) -> int:
    scenario = _load(args)
    sys.stdout.write(emit_scenario(scenario))
    return EXIT_OK


def _validation_checks(scenario: Scenario):
    """Yield (name, passed, detail) tuples for the invariant battery."""
    import numpy as np

    from .quadrature import build_quadrature, half_gauss_moment
    from .relayset import (lemma1_residual, network_active_distribution,
                           outage_probability)
    from .shadowing import LinkStat, oper

    rule = build_quadrature(scenario.quadrature_n)

    worst = 0.0
    for k in range(0, 2 * rule.count, 3):
        approx = float(np.sum(rule.weights * rule.nodes ** k))
        worst = max(worst, abs(approx - half_gauss_moment(k))
                    / half_gauss_moment(k))
    yield ("quadrature-moments", worst < 1e-11, f"max rel err {worst:.2e}")

    config = scenario.network_config()
    dist = network_active_distribution(config, rule,
                                       enumeration_cap=scenario.enum_cap)
    total = float(dist.probs.sum())
    yield ("active-set-normalization", abs(total - 1.0) < 1e-6,
           f"sum {total:.9f}")

    from .relayset import (expected_active_closed_form,
                           expected_active_from_distribution)
    mean_d = expected_active_from_distribution(dist)
    mean_c = expected_active_closed_form(config)
    yield ("mean-active-closed-form", abs(mean_d - mean_c) < 1e-3,
           f"distribution {mean_d:.6f} vs closed form {mean_c:.6f}")

    res = max(lemma1_residual(config.gamma_star_db, link.mu_db,
                              link.sigma_db, rho)
              for link in {config.ar_links[0], config.br_links[0]}
              for rho in (0.0, 0.4, 0.8) if link.sigma_db > 0)
    yield ("lemma1-residual", res < 1e-8, f"max residual {res:.2e}")

    mono = all(oper(LinkStat(15.0, 3.0), g1) <= oper(LinkStat(15.0, 3.0), g2)
               for g1, g2 in ((10.0, 12.0), (12.0, 16.14), (16.14, 20.0)))
    yield ("oper-monotone", mono, "gamma* grid")

    metrics = run_simulation(config, scenario.mac_profile(),
                             scenario.power_profile(),
                             rounds=scenario.rounds, seed=scenario.seed,
                             workers=scenario.workers)
    p_out = outage_probability(dist)
    if metrics.coop_attempts:
        slack = 3.0 * max(metrics.stderr_outage_rate, 1e-6) + 1e-9
        ok = abs(metrics.outage_rate - p_out) <= slack
        yield ("outage-sim-vs-analytic", ok,
               f"sim {metrics.outage_rate:.6f} vs analytic {p_out:.6f} "
               f"(slack {slack:.2e})")
        slack = 3.0 * max(metrics.stderr_mean_active, 1e-6)
        ok = abs(metrics.mean_active - mean_c) <= slack
        yield ("mean-active-sim-vs-closed-form", ok,
               f"sim {metrics.mean_active:.4f} vs {mean_c:.4f}")
    rerun = run_simulation(config, scenario.mac_profile(),
                           scenario.power_profile(), rounds=scenario.rounds,
                           seed=scenario.seed, workers=scenario.workers)
    yield ("simulation-deterministic",
           rerun.total_time_us == metrics.total_time_us
           and rerun.delivered_bits == metrics.delivered_bits,
           "same seed, same tallies")

    report = analytic_report(scenario)
    psum = report.p_i + report.p_s + report.p_c
    yield ("slot-probabilities-sum", abs(psum - 1.0) < 1e-9,
           f"sum {psum:.12f}")
    if metrics.coop_successes and report.oper_ab > 0.5:
        rel = abs(report.throughput_bps - metrics.throughput_bps) \
            / metrics.throughput_bps
        yield ("throughput-sim-vs-analytic", rel < 0.10,
               f"analytic {report.throughput_bps/1e6:.3f} Mb/s vs "
               f"sim {metrics.throughput_bps/1e6:.3f} Mb/s ({rel:.1%})")


def cmd_validate(args) -> int:
    scenario = _load(args)
    failures = 0
    print(f"{'check':40s} {'status':6s} detail")
    for name, passed, detail in _validation_checks(scenario):
        status = "pass" if passed else "FAIL"
        if not passed:
            failures += 1
        print(f"{name:40s} {status:6s} {detail}")
    if failures:
        raise ValidationError(f"{failures} validation check(s) failed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coopmac",
        description="Analytic model and packet-level simulator of a "
                    "network-coded cooperative ARQ MAC under correlated "
                    "log-normal shadowing")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, sweep=False):
        p.add_argument("--config", help="scenario file or inline key=value")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--rounds", type=int, default=None)
        p.add_argument("--quadrature", type=int, default=None,
                       help="quadrature rule order (default 15)")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--out", default=None, help="CSV path (default stdout)")

    p = sub.add_parser("analytic", help="closed-form/quadrature evaluation")
    common(p)
    p.set_defaults(func=cmd_analytic)
    p = sub.add_parser("simulate", help="packet-level Monte Carlo")
    common(p)
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("sweep", help="axis sweep, analytic + simulated")
    common(p)
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True,
                   help="comma-separated axis values")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("validate", help="invariant battery + sim comparison")
    common(p)
    p.set_defaults(func=cmd_validate)
    p = sub.add_parser("emit-config",
                       help="print the fully resolved scenario")
    common(p)
    p.set_defaults(func=cmd_emit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValidationError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CoopmacError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
