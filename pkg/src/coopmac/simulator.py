"""Slotted Monte Carlo simulator of the cooperative round structure.

Each round: node A transmits directly; on failure node B answers with a
cooperation request carrying its own packet, the relays that decoded
both packets contend with DCF backoff (frozen counters during busy
slots, doubled windows for colliders), the winner forwards the coded
packet and two ACKs close the round; an empty active set burns the
timeout.  Shadowing is redrawn independently every round.

Determinism contract: rounds are split over a fixed number of logical
shards regardless of worker count; shard s draws from a child of
SeedSequence(seed) and tallies are reduced in shard order, so a given
(config, seed, rounds) triple produces bit-identical metrics for any
worker count, any backend, across runs.  Per-round contention randomness
comes from a counter-indexed SplitMix64 stream seeded per round, which
both kernel backends consume identically.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._core import kernels
from .errors import ConfigError
from .macmodel import FrameTimes, MacProfile, PowerProfile
from .orthant import RelayMask
from .shadowing import KmsMatrix, NetworkConfig, kms_factor

SHARD_COUNT = 64
MAX_RELAYS = 64


@dataclass(frozen=True)
class RoundOutcome:
    """One communication round's events and ledger."""

    direct_success: bool
    active_mask: RelayMask
    outage: bool
    idle_slots: int
    collisions: int
    colliders_total: int
    round_time_us: float
    round_energy_mj: float
    delivered_bits: int


@dataclass
class SimMetrics:
    """Aggregated tallies plus derived rates.

    throughput = delivered bits / elapsed time; eta = delivered bits /
    consumed energy; outage and active-set statistics are conditioned on
    rounds that actually entered the cooperation phase.
    """

    rounds: int = 0
    direct_successes: int = 0
    coop_attempts: int = 0
    outages: int = 0
    coop_successes: int = 0
    idle_slots: int = 0
    collisions: int = 0
    colliders_total: int = 0
    active_sum: int = 0
    active_sq_sum: int = 0
    delivered_bits: float = 0.0
    total_time_us: float = 0.0
    total_energy_mj: float = 0.0
    bits_sq_sum: float = 0.0
    time_sq_sum: float = 0.0
    bits_time_sum: float = 0.0
    contention_time_us: float = 0.0
    outcomes: list = field(default_factory=list, repr=False)

    def merge(self, other: "SimMetrics") -> None:
        for name in ("rounds", "direct_successes", "coop_attempts", "outages",
                     "coop_successes", "idle_slots", "collisions",
                     "colliders_total", "active_sum", "active_sq_sum",
                     "delivered_bits", "total_time_us", "total_energy_mj",
                     "bits_sq_sum", "time_sq_sum", "bits_time_sum",
                     "contention_time_us"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        self.outcomes.extend(other.outcomes)

    @property
    def throughput_bps(self) -> float:
        return self.delivered_bits / (self.total_time_us * 1e-6)

    @property
    def eta_bits_per_joule(self) -> float:
        return self.delivered_bits / (self.total_energy_mj * 1e-3)

    @property
    def outage_rate(self) -> float:
        return self.outages / self.coop_attempts if self.coop_attempts else \
            float("nan")

    @property
    def mean_active(self) -> float:
        return self.active_sum / self.coop_attempts if self.coop_attempts \
            else float("nan")

    @property
    def mean_contention_us(self) -> float:
        done = self.coop_attempts - self.outages
        return self.contention_time_us / done if done else float("nan")

    @property
    def stderr_throughput_bps(self) -> float:
        """Delta-method standard error of the bits/time ratio."""
        n = self.rounds
        if n < 2 or self.total_time_us <= 0:
            return float("nan")
        mb = self.delivered_bits / n
        mt = self.total_time_us / n
        ratio = mb / mt
        var = (self.bits_sq_sum / n - mb * mb
               - 2 * ratio * (self.bits_time_sum / n - mb * mt)
               + ratio * ratio * (self.time_sq_sum / n - mt * mt))
        var = max(var, 0.0)
        return float(np.sqrt(var / n) / mt / 1e-6)

    @property
    def stderr_outage_rate(self) -> float:
        if not self.coop_attempts:
            return float("nan")
        p = self.outage_rate
        return float(np.sqrt(p * (1.0 - p) / self.coop_attempts))

    @property
    def stderr_mean_active(self) -> float:
        n = self.coop_attempts
        if n < 2:
            return float("nan")
        m = self.mean_active
        var = max(self.active_sq_sum / n - m * m, 0.0)
        return float(np.sqrt(var / n))


def _shard_sizes(rounds: int) -> list[int]:
    base, extra = divmod(rounds, SHARD_COUNT)
    return [base + (1 if s < extra else 0) for s in range(SHARD_COUNT)]


def _run_shard(config: NetworkConfig, mac: MacProfile, power: PowerProfile,
               seed_seq: np.random.SeedSequence, rounds: int,
               collect: bool) -> SimMetrics:
    n = config.n
    rng = np.random.default_rng(seed_seq)
    ft = FrameTimes.from_profile(mac)
    g_star = config.gamma_star_db

    # draw order is part of the determinism contract: AB gains, A-side
    # matrix, B-side matrix, then per-round contention seeds
    z_ab = rng.standard_normal(rounds)
    z_a = rng.standard_normal((rounds, n))
    z_b = rng.standard_normal((rounds, n))
    seeds = rng.integers(0, 2 ** 64, size=rounds, dtype=np.uint64)

    la = kms_factor(KmsMatrix(n=n, rho=config.rho1))
    lb = kms_factor(KmsMatrix(n=n, rho=config.rho2))
    mu_a = np.array([s.mu_db for s in config.ar_links])
    sg_a = np.array([s.sigma_db for s in config.ar_links])
    mu_b = np.array([s.mu_db for s in config.br_links])
    sg_b = np.array([s.sigma_db for s in config.br_links])

    gain_ab = config.ab_link.mu_db + config.ab_link.sigma_db * z_ab
    gain_a = mu_a[None, :] + sg_a[None, :] * (z_a @ la.T)
    gain_b = mu_b[None, :] + sg_b[None, :] * (z_b @ lb.T)

    direct = gain_ab > g_star
    active = (gain_a > g_star) & (gain_b > g_star)
    kvec = active.sum(axis=1).astype(np.int64)
    mask_bits = (active.astype(np.uint64)
                 << np.arange(n, dtype=np.uint64)[None, :]).sum(axis=1)

    contend = (~direct) & (kvec >= 1)
    kv = np.where(contend, kvec, 0)
    idle, cols, colliders = kernels.contention_rounds(
        kv, seeds, mac.cw_min, mac.backoff_stages)

    outage = (~direct) & (kvec == 0)
    payload_bits = 8 * mac.payload_bytes

    # per-round time (us)
    t_cont = idle * mac.slot_us + cols * ft.t_col_us
    t_round = np.full(rounds, ft.t_data_us)
    t_round += np.where(direct, 0.0, ft.t_def_us)
    t_round += np.where(outage, mac.timeout_us, 0.0)
    coop_tail = (mac.t_onc_us + mac.difs_us + ft.t_data_us
                 + 2.0 * mac.sifs_us + 2.0 * ft.t_ctrl_us)
    t_round += np.where(contend, t_cont + coop_tail, 0.0)

    # per-round energy (mJ); mW * us = nJ
    e_direct = (power.p_tx_mw + (n + 1) * power.p_rx_mw) * ft.t_data_us
    e_out = (n + 2) * power.p_idle_mw * mac.timeout_us
    rfc_b = ft.t_ctrl_us + ft.t_data_us
    e_min = ((n + 2) * power.p_idle_mw
             * (3.0 * mac.sifs_us + mac.difs_us + mac.t_onc_us)
             + (power.p_tx_mw + (n + 1) * power.p_rx_mw) * rfc_b
             + (power.p_tx_mw + 2 * power.p_rx_mw
                + (n - 1) * power.p_idle_mw) * ft.t_data_us
             + 2 * (power.p_tx_mw + (n + 1) * power.p_rx_mw) * ft.t_ctrl_us)
    e_idle = idle * ((n + 2) * power.p_idle_mw * mac.slot_us)
    e_col = (colliders * power.p_tx_mw
             + cols * (2 * power.p_rx_mw + n * power.p_idle_mw)
             - colliders * power.p_idle_mw) * ft.t_col_us
    e_round = np.full(rounds, e_direct)
    e_round += np.where(outage, e_out, 0.0)
    e_round += np.where(contend, e_min + e_idle + e_col, 0.0)
    e_round *= 1e-6

    bits = np.where(direct, payload_bits,
                    np.where(contend, 2 * payload_bits, 0)).astype(float)

    m = SimMetrics()
    m.rounds = rounds
    m.direct_successes = int(direct.sum())
    m.coop_attempts = int((~direct).sum())
    m.outages = int(outage.sum())
    m.coop_successes = int(contend.sum())
    m.idle_slots = int(idle.sum())
    m.collisions = int(cols.sum())
    m.colliders_total = int(colliders.sum())
    coop_k = kvec[~direct]
    m.active_sum = int(coop_k.sum())
    m.active_sq_sum = int((coop_k ** 2).sum())
    m.delivered_bits = float(bits.sum())
    m.total_time_us = float(t_round.sum())
    m.total_energy_mj = float(e_round.sum())
    m.bits_sq_sum = float((bits ** 2).sum())
    m.time_sq_sum = float((t_round ** 2).sum())
    m.bits_time_sum = float((bits * t_round).sum())
    m.contention_time_us = float(t_cont[contend].sum())
    if collect:
        m.outcomes = [
            RoundOutcome(direct_success=bool(direct[i]),
                         active_mask=RelayMask(bits=int(mask_bits[i]),
                                               width=n),
                         outage=bool(outage[i]),
                         idle_slots=int(idle[i]), collisions=int(cols[i]),
                         colliders_total=int(colliders[i]),
                         round_time_us=float(t_round[i]),
                         round_energy_mj=float(e_round[i]),
                         delivered_bits=int(bits[i]))
            for i in range(rounds)]
    return m


def run_simulation(config: NetworkConfig, mac: MacProfile,
                   power: PowerProfile, rounds: int, seed: int,
                   workers: int = 1, collect_outcomes: bool = False
                   ) -> SimMetrics:
    """Simulate ``rounds`` independent communication rounds."""
    if rounds < 1:
        raise ConfigError(f"rounds must be >= 1, got {rounds}")
    if config.n > MAX_RELAYS:
        raise ConfigError(
            f"the simulator supports at most {MAX_RELAYS} relays")
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    children = np.random.SeedSequence(seed).spawn(SHARD_COUNT)
    sizes = _shard_sizes(rounds)
    jobs = [(children[s], sizes[s]) for s in range(SHARD_COUNT) if sizes[s]]

    def work(job):
        child, size = job
        return _run_shard(config, mac, power, child, size, collect_outcomes)

    if workers == 1:
        parts = [work(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, jobs))
    total = SimMetrics()
    for part in parts:  # fixed shard order keeps reductions deterministic
        total.merge(part)
    return total


def run_round(config: NetworkConfig, mac: MacProfile, power: PowerProfile,
              rng: np.random.Generator) -> RoundOutcome:
    """Simulate a single round using the caller's generator."""
    seed_seq = np.random.SeedSequence(int(rng.integers(0, 2 ** 63)))
    m = _run_shard(config, mac, power, seed_seq, 1, collect=True)
    return m.outcomes[0]


def audit_round_energy(outcome: RoundOutcome, config: NetworkConfig,
                       mac: MacProfile, power: PowerProfile) -> float:
    """Recompute a round's energy from an explicit node-state table
    (independent of the vectorized ledger) for auditing."""
    n = config.n
    ft = FrameTimes.from_profile(mac)
    states_mw = {"tx": power.p_tx_mw, "rx": power.p_rx_mw,
                 "idle": power.p_idle_mw}
    phases: list[tuple[float, dict]] = []
    # direct transmission: A transmits, everyone else receives
    phases.append((ft.t_data_us, {"tx": 1, "rx": n + 1, "idle": 0}))
    if not outcome.direct_success:
        if outcome.outage:
            phases.append((mac.timeout_us, {"tx": 0, "rx": 0, "idle": n + 2}))
        else:
            # SIFS, RFC+b from B, NC processing, DIFS
            phases.append((mac.sifs_us, {"idle": n + 2, "tx": 0, "rx": 0}))
            phases.append((ft.t_ctrl_us + ft.t_data_us,
                           {"tx": 1, "rx": n + 1, "idle": 0}))
            phases.append((mac.t_onc_us, {"idle": n + 2, "tx": 0, "rx": 0}))
            phases.append((mac.difs_us, {"idle": n + 2, "tx": 0, "rx": 0}))
            # contention: idle slots, then each collision burns T_col
            phases.append((outcome.idle_slots * mac.slot_us,
                           {"idle": n + 2, "tx": 0, "rx": 0}))
            # collisions: colliders transmit, A and B receive, rest idle
            if outcome.collisions:
                mean_l = outcome.colliders_total / outcome.collisions
                phases.append((outcome.collisions * ft.t_col_us,
                               {"tx": mean_l, "rx": 2,
                                "idle": n - mean_l}))
            # winner forwards the coded packet; A and B receive
            phases.append((ft.t_data_us, {"tx": 1, "rx": 2, "idle": n - 1}))
            # SIFS + two ACKs (each: one tx, everyone else rx) + SIFS between
            phases.append((2 * mac.sifs_us, {"idle": n + 2, "tx": 0, "rx": 0}))
            phases.append((2 * ft.t_ctrl_us, {"tx": 1, "rx": n + 1, "idle": 0}))
    total_nj = 0.0
    for dur, occupancy in phases:
        for state, count in occupancy.items():
            total_nj += states_mw[state] * count * dur
    return total_nj * 1e-6
