"""Analytical MAC model: saturation-style throughput and energy efficiency
of the cooperative round, driven by the PHY quantities (direct-link OPER,
outage probability, expected active-relay count).

Channel access during the cooperation phase follows the standard DCF
Markov-chain fixed point (tau), with the number of contenders set to the
expected active-set size, which may be non-integer: the slot-probability
expressions use real exponents, while the collision-size sum uses a
half-up-rounded integer count (a binomial with a fractional upper limit
is undefined; continuity at half points is covered by tests).

One deliberate departure from a literal reading of the energy ledger:
the contention-phase energy charges the *expected numbers* of idle slots
(p_i/p_s) and collisions (p_c/p_s) before a success, mirroring the
structure of the expected contention time.  Charging a single expected
slot-event instead underestimates the round energy by 10-20% against the
packet-level simulator, which is the arbiter here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

from scipy.special import comb

from .errors import ConfigError, NumericError


@dataclass(frozen=True)
class MacProfile:
    """Timings (us), sizes (bytes), rates (b/s) and backoff parameters."""

    payload_bytes: int = 1500
    mac_header_bytes: int = 34
    phy_header_us: float = 96.0
    slot_us: float = 20.0
    sifs_us: float = 10.0
    difs_us: float = 50.0
    timeout_us: float = 80.0
    data_rate_bps: float = 54e6
    ctrl_rate_bps: float = 6e6
    ctrl_frame_bytes: int = 14
    t_onc_us: float = 0.0
    cw_min: int = 32
    backoff_stages: int = 5

    def __post_init__(self):
        for f in ("phy_header_us", "slot_us", "sifs_us", "difs_us",
                  "timeout_us", "t_onc_us"):
            if getattr(self, f) < 0:
                raise ConfigError(f"{f} must be >= 0")
        if self.data_rate_bps <= 0 or self.ctrl_rate_bps <= 0:
            raise ConfigError("rates must be > 0")
        if self.cw_min < 2:
            raise ConfigError(f"cw_min must be >= 2, got {self.cw_min}")
        if self.backoff_stages < 0:
            raise ConfigError("backoff_stages must be >= 0")
        if self.payload_bytes <= 0 or self.mac_header_bytes < 0 \
                or self.ctrl_frame_bytes < 0:
            raise ConfigError("frame sizes must be positive")


@dataclass(frozen=True)
class PowerProfile:
    """Node power draw (mW) by radio state."""

    p_tx_mw: float = 1900.0
    p_rx_mw: float = 1340.0
    p_idle_mw: float = 1340.0

    def __post_init__(self):
        if min(self.p_tx_mw, self.p_rx_mw, self.p_idle_mw) < 0:
            raise ConfigError("power levels must be >= 0")


@dataclass(frozen=True)
class FrameTimes:
    """Airtimes (us) derived from a MacProfile.

    The data frame is PHY header plus (payload + MAC header) at the data
    rate; control frames (the cooperation request and the ACK) are PHY
    header plus ctrl_frame_bytes at the control rate.  The piggybacked
    packet and the coded packet are full data frames.
    """

    t_data_us: float
    t_ctrl_us: float
    t_def_us: float
    t_col_us: float

    @classmethod
    def from_profile(cls, mac: MacProfile) -> "FrameTimes":
        t_data = mac.phy_header_us + 8.0 * (mac.payload_bytes
                                            + mac.mac_header_bytes) \
            / mac.data_rate_bps * 1e6
        t_ctrl = mac.phy_header_us + 8.0 * mac.ctrl_frame_bytes \
            / mac.ctrl_rate_bps * 1e6
        t_def = mac.sifs_us + t_ctrl + t_data
        t_col = mac.difs_us + t_data + mac.sifs_us
        return cls(t_data_us=t_data, t_ctrl_us=t_ctrl, t_def_us=t_def,
                   t_col_us=t_col)


@dataclass(frozen=True)
class AnalyticReport:
    """Every intermediate the analytic pipeline produces, one CSV row's
    worth.  throughput_bps = s_direct_bps + s_coop_bps by construction."""

    oper_ab: float
    p_out: float
    e_active: float
    tau: float
    p_i: float
    p_s: float
    p_c: float
    e_t_d_us: float
    e_t_coop_us: float
    e_t_c_us: float
    e_l: float
    throughput_bps: float
    s_direct_bps: float
    s_coop_bps: float
    energy_per_round_mj: float
    eta_bits_per_joule: float

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def tau_fixed_point(e_active: float, cw_min: int = 32,
                    stages: int = 5) -> float:
    """Per-slot transmission probability from the two-equation DCF fixed
    point with e_active contenders (real-valued exponent):

        tau = 2 (1-2p) / ((1-2p)(W+1) + p W (1-(2p)^m))
        p = 1 - (1-tau)^max(e_active-1, 0)

    For e_active <= 1 the collision probability is 0 and tau = 2/(W+1).
    """
    if e_active < 0:
        raise ConfigError(f"e_active must be >= 0, got {e_active}")
    w = cw_min
    if e_active <= 1.0:
        return 2.0 / (w + 1.0)
    expo = e_active - 1.0

    def tau_of_p(p):
        # geometric-series form of the Bianchi expression; identical to
        # 2(1-2p)/((1-2p)(W+1)+pW(1-(2p)^m)) but regular at p = 1/2
        ps = sum((2.0 * p) ** i for i in range(stages))
        return 2.0 / (1.0 + w + p * w * ps)

    tau = 2.0 / (w + 1.0)
    for _ in range(10_000):
        p = 1.0 - (1.0 - tau) ** expo
        tau_new = tau_of_p(p)
        if abs(tau_new - tau) < 1e-12:
            tau = tau_new
            break
        tau = 0.5 * (tau + tau_new)
    else:
        raise NumericError("DCF fixed point failed to converge")
    p = 1.0 - (1.0 - tau) ** expo
    if abs(tau - tau_of_p(p)) > 1e-10:
        raise NumericError("DCF fixed point residual too large")
    return tau


def contention_probs(tau: float, e_active: float) -> tuple[float, float, float]:
    """(p_idle, p_success, p_collision) of a backoff slot with e_active
    contenders; real exponents, so p_c can be marginally negative when
    e_active < 1 (documented model artifact).  The three always sum to 1.
    """
    if not 0.0 < tau < 1.0:
        raise ConfigError(f"tau must be in (0, 1), got {tau}")
    if e_active <= 0:
        raise ConfigError(f"e_active must be > 0, got {e_active}")
    p_tr = 1.0 - (1.0 - tau) ** e_active
    p_s = e_active * tau * (1.0 - tau) ** (e_active - 1.0)
    return 1.0 - p_tr, p_s, p_tr - p_s


def expected_contention_time(probs: tuple[float, float, float],
                             mac: MacProfile) -> float:
    """E[T_C] = (1/p_s - 1) [ (p_i/(1-p_s)) T_slot + (p_c/(1-p_s)) T_col ]."""
    p_i, p_s, p_c = probs
    if p_s <= 0.0:
        raise NumericError("p_s = 0: contention never succeeds")
    if p_s >= 1.0:
        return 0.0
    ft = FrameTimes.from_profile(mac)
    return (1.0 / p_s - 1.0) * ((p_i / (1.0 - p_s)) * mac.slot_us
                                + (p_c / (1.0 - p_s)) * ft.t_col_us)


def expected_colliders(e_active: float, tau: float) -> float:
    """E[L], the mean number of simultaneous transmitters in a collision,
    evaluated at the half-up-rounded integer contender count (>= 1); 0
    when fewer than two contenders can collide."""
    n_int = max(int(math.floor(e_active + 0.5)), 1)
    if n_int < 2:
        return 0.0
    p_c = 1.0 - (1.0 - tau) ** n_int - n_int * tau * (1.0 - tau) ** (n_int - 1)
    if p_c <= 0.0:
        return 0.0
    total = sum(ell * comb(n_int, ell, exact=True)
                * tau ** ell * (1.0 - tau) ** (n_int - ell)
                for ell in range(2, n_int + 1))
    return total / p_c


def _contention_event_counts(p_i, p_s, p_c):
    """Expected numbers of idle slots and collisions before a success."""
    return p_i / p_s, p_c / p_s


def throughput(oper_ab: float, p_out: float, e_active: float,
               mac: MacProfile,
               coop_denominator: str = "unconditional") -> dict:
    """Direct and cooperative throughput terms (b/s).

    ``coop_denominator`` picks how the cooperative term's denominator
    treats outage: "unconditional" (default) uses E[T_d] + E[T_coop]
    verbatim; "outage_weighted" replaces E[T_coop] by its non-outage
    conditional (an alternative documented for simulator-comparison
    studies, not the model default).
    """
    if coop_denominator not in ("unconditional", "outage_weighted"):
        raise ConfigError(
            f"unknown coop_denominator {coop_denominator!r}")
    ft = FrameTimes.from_profile(mac)
    payload_bits = 8.0 * mac.payload_bytes
    tau = tau_fixed_point(e_active, mac.cw_min, mac.backoff_stages)
    probs = contention_probs(tau, max(e_active, 1e-12))
    e_t_c = expected_contention_time(probs, mac)
    e_t_cont = (mac.t_onc_us + mac.difs_us + e_t_c + ft.t_data_us
                + 2.0 * mac.sifs_us + 2.0 * ft.t_ctrl_us)
    e_t_ovh = p_out * mac.timeout_us + (1.0 - p_out) * e_t_cont
    e_t_coop = ft.t_def_us + e_t_ovh
    if coop_denominator == "outage_weighted":
        denom_coop = ft.t_def_us + e_t_cont
    else:
        denom_coop = e_t_coop
    s_d = (1.0 - oper_ab) * payload_bits / (ft.t_data_us * 1e-6)
    s_coop = 2.0 * oper_ab * (1.0 - p_out) * payload_bits \
        / ((ft.t_data_us + denom_coop) * 1e-6)
    return {
        "tau": tau, "p_i": probs[0], "p_s": probs[1], "p_c": probs[2],
        "e_t_d_us": ft.t_data_us, "e_t_c_us": e_t_c,
        "e_t_coop_us": e_t_coop, "s_direct_bps": s_d, "s_coop_bps": s_coop,
        "throughput_bps": s_d + s_coop,
    }


def energy_ledger(n: int, mac: MacProfile, power: PowerProfile) -> dict:
    """Deterministic energy components (mJ): direct phase, outage timeout,
    perfectly scheduled cooperation, idle slot, and the per-collision cost
    for a given number of simultaneous transmitters is built by the
    caller.  mW * us = nJ, hence the 1e-6 factors to mJ.

    The scheduled-cooperation term charges exactly three SIFS idle
    periods (after the failed direct packet, before the first ACK and
    between the two ACKs), matching the round's frame sequence.
    """
    ft = FrameTimes.from_profile(mac)
    e_d = (power.p_tx_mw * ft.t_data_us
           + (n + 1) * power.p_rx_mw * ft.t_data_us) * 1e-6
    e_out = (n + 2) * power.p_idle_mw * mac.timeout_us * 1e-6
    rfc_b = ft.t_ctrl_us + ft.t_data_us
    e_min = ((n + 2) * power.p_idle_mw * mac.sifs_us
             + power.p_tx_mw * rfc_b + (n + 1) * power.p_rx_mw * rfc_b
             + (n + 2) * power.p_idle_mw * mac.t_onc_us
             + (n + 2) * power.p_idle_mw * mac.difs_us
             + power.p_tx_mw * ft.t_data_us + 2 * power.p_rx_mw * ft.t_data_us
             + (n - 1) * power.p_idle_mw * ft.t_data_us
             + (n + 2) * power.p_idle_mw * mac.sifs_us
             + 2 * power.p_tx_mw * ft.t_ctrl_us
             + 2 * (n + 1) * power.p_rx_mw * ft.t_ctrl_us
             + (n + 2) * power.p_idle_mw * mac.sifs_us) * 1e-6
    e_idle_slot = (n + 2) * power.p_idle_mw * mac.slot_us * 1e-6
    return {"e_d_mj": e_d, "e_out_mj": e_out, "e_min_mj": e_min,
            "e_idle_slot_mj": e_idle_slot, "t_col_us": ft.t_col_us}


def energy_efficiency(oper_ab: float, p_out: float, e_active: float,
                      probs: tuple[float, float, float], mac: MacProfile,
                      power: PowerProfile, n: int) -> dict:
    """Expected per-round energy (mJ) and bits-per-joule efficiency."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    p_i, p_s, p_c = probs
    led = energy_ledger(n, mac, power)
    tau = tau_fixed_point(e_active, mac.cw_min, mac.backoff_stages)
    e_l = expected_colliders(e_active, tau)
    e_col = (e_l * power.p_tx_mw + 2 * power.p_rx_mw
             + (n - e_l) * power.p_idle_mw) * led["t_col_us"] * 1e-6
    n_idle, n_col = _contention_event_counts(p_i, p_s, p_c)
    e_cont = n_idle * led["e_idle_slot_mj"] + n_col * e_col
    e_coop = p_out * led["e_out_mj"] + (1.0 - p_out) * (led["e_min_mj"]
                                                        + e_cont)
    e_total = led["e_d_mj"] + oper_ab * e_coop
    payload_bits = 8.0 * mac.payload_bytes
    useful_bits = (1.0 - oper_ab) * payload_bits \
        + 2.0 * oper_ab * (1.0 - p_out) * payload_bits
    eta = useful_bits / (e_total * 1e-3) if e_total > 0 else 0.0
    return {"e_l": e_l, "energy_per_round_mj": e_total,
            "eta_bits_per_joule": eta}


def analyze(oper_ab: float, p_out: float, e_active: float, n: int,
            mac: MacProfile, power: PowerProfile,
            coop_denominator: str = "unconditional") -> AnalyticReport:
    """Assemble the full report from the PHY-derived inputs."""
    thr = throughput(oper_ab, p_out, e_active, mac, coop_denominator)
    en = energy_efficiency(oper_ab, p_out, e_active,
                           (thr["p_i"], thr["p_s"], thr["p_c"]),
                           mac, power, n)
    return AnalyticReport(
        oper_ab=oper_ab, p_out=p_out, e_active=e_active, tau=thr["tau"],
        p_i=thr["p_i"], p_s=thr["p_s"], p_c=thr["p_c"],
        e_t_d_us=thr["e_t_d_us"], e_t_coop_us=thr["e_t_coop_us"],
        e_t_c_us=thr["e_t_c_us"], e_l=en["e_l"],
        throughput_bps=thr["throughput_bps"],
        s_direct_bps=thr["s_direct_bps"], s_coop_bps=thr["s_coop_bps"],
        energy_per_round_mj=en["energy_per_round_mj"],
        eta_bits_per_joule=en["eta_bits_per_joule"])
