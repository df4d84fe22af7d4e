"""Scenario configuration: flat key=value text with unit-suffixed keys.

An empty document yields the default scenario (1500-byte payload, CW 32,
20 us slots, 80 us timeout, SIFS/DIFS 10/50 us, 34-byte MAC header,
96 us PHY header, 54/6 Mb/s data/control rates, 16.14 dB threshold,
1900/1340/1340 mW power levels, one relay at 20 dB mean and 2 dB
shadowing deviation, 8 dB direct link).  Relay-link keys accept either a
scalar (broadcast to all relays) or a comma list of per-relay values.
The direct link's sigma follows the relay sigma unless set explicitly.

parse and emit round-trip exactly; unknown keys, malformed values and
out-of-domain values are rejected with the key name and line number.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

from .errors import ConfigError
from .macmodel import MacProfile, PowerProfile
from .shadowing import LinkStat, NetworkConfig

SWEEP_AXES = ("sigma", "rho", "n", "mu")


@dataclass(frozen=True)
class Scenario:
    n: int = 1
    rho1: float = 0.0
    rho2: float = 0.0
    gamma_star_db: float = 16.14
    mu_ar_db: tuple[float, ...] = (20.0,)
    sigma_ar_db: tuple[float, ...] = (2.0,)
    mu_br_db: tuple[float, ...] = (20.0,)
    sigma_br_db: tuple[float, ...] = (2.0,)
    mu_ab_db: float = 8.0
    sigma_ab_db: float | None = None   # None: follow scalar sigma_ar_db
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
    p_tx_mw: float = 1900.0
    p_rx_mw: float = 1340.0
    p_idle_mw: float = 1340.0
    rounds: int = 100_000
    seed: int = 1
    quadrature_n: int = 15
    enum_cap: int = 12
    workers: int = 1

    def effective_sigma_ab(self) -> float:
        if self.sigma_ab_db is not None:
            return self.sigma_ab_db
        unique = set(self.sigma_ar_db)
        if len(unique) != 1:
            raise ConfigError(
                "sigma_ab_db must be set explicitly when sigma_ar_db is "
                "per-relay")
        return self.sigma_ar_db[0]

    def network_config(self) -> NetworkConfig:
        ar = tuple(LinkStat(mu_db=m, sigma_db=s)
                   for m, s in zip(self.mu_ar_db, self.sigma_ar_db))
        br = tuple(LinkStat(mu_db=m, sigma_db=s)
                   for m, s in zip(self.mu_br_db, self.sigma_br_db))
        ab = LinkStat(mu_db=self.mu_ab_db, sigma_db=self.effective_sigma_ab())
        return NetworkConfig(n=self.n, rho1=self.rho1, rho2=self.rho2,
                             ar_links=ar, br_links=br, ab_link=ab,
                             gamma_star_db=self.gamma_star_db)

    def mac_profile(self) -> MacProfile:
        return MacProfile(
            payload_bytes=self.payload_bytes,
            mac_header_bytes=self.mac_header_bytes,
            phy_header_us=self.phy_header_us, slot_us=self.slot_us,
            sifs_us=self.sifs_us, difs_us=self.difs_us,
            timeout_us=self.timeout_us, data_rate_bps=self.data_rate_bps,
            ctrl_rate_bps=self.ctrl_rate_bps,
            ctrl_frame_bytes=self.ctrl_frame_bytes, t_onc_us=self.t_onc_us,
            cw_min=self.cw_min, backoff_stages=self.backoff_stages)

    def power_profile(self) -> PowerProfile:
        return PowerProfile(p_tx_mw=self.p_tx_mw, p_rx_mw=self.p_rx_mw,
                            p_idle_mw=self.p_idle_mw)


_RELAY_KEYS = ("mu_ar_db", "sigma_ar_db", "mu_br_db", "sigma_br_db")
_FLOAT_KEYS = {
    "gamma_star_db", "mu_ab_db", "sigma_ab_db", "phy_header_us", "slot_us",
    "sifs_us", "difs_us", "timeout_us", "data_rate_bps", "ctrl_rate_bps",
    "t_onc_us", "p_tx_mw", "p_rx_mw", "p_idle_mw",
}
_INT_KEYS = {
    "n", "payload_bytes", "mac_header_bytes", "ctrl_frame_bytes", "cw_min",
    "backoff_stages", "rounds", "seed", "quadrature_n", "enum_cap", "workers",
}
_RHO_KEYS = {"rho", "rho1", "rho2"}
KNOWN_KEYS = _FLOAT_KEYS | _INT_KEYS | _RHO_KEYS | set(_RELAY_KEYS)


def _parse_number(key, raw, line_no, kind=float):
    try:
        value = kind(raw)
    except ValueError:
        raise ConfigError(
            f"line {line_no}: malformed value for {key}: {raw!r}") from None
    return value


def _check_domains(key, value, line_no):
    if key in _RHO_KEYS and not 0.0 <= value < 1.0:
        raise ConfigError(
            f"line {line_no}: {key} must be in [0, 1), got {value}")
    if key.startswith("sigma") and value is not None and value < 0:
        raise ConfigError(
            f"line {line_no}: {key} must be >= 0, got {value}")
    if key == "n" and value < 1:
        raise ConfigError(f"line {line_no}: n must be >= 1, got {value}")
    if key in ("rounds", "workers", "quadrature_n", "enum_cap") and value < 1:
        raise ConfigError(f"line {line_no}: {key} must be >= 1, got {value}")


def _split_pairs(line: str):
    """Split 'a = 1, b = 2,3' into ('a', '1') and ('b', '2,3'): a comma
    starts a new pair only when an '=' follows before the next comma."""
    segments = line.split(",")
    pairs = []
    for seg in segments:
        if "=" in seg:
            key, _, raw = seg.partition("=")
            pairs.append([key.strip(), raw.strip()])
        elif pairs:
            pairs[-1][1] += "," + seg.strip()
        elif seg.strip():
            raise ConfigError(f"expected key=value, got {seg.strip()!r}")
    return [(k, v) for k, v in pairs]


def parse_scenario_text(text: str) -> Scenario:
    raw: dict[str, tuple] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            pairs = _split_pairs(line)
        except ConfigError as exc:
            raise ConfigError(f"line {line_no}: {exc}") from None
        for key, value in pairs:
            if key not in KNOWN_KEYS:
                raise ConfigError(f"line {line_no}: unknown key {key!r}")
            if key in raw:
                raise ConfigError(f"line {line_no}: duplicate key {key!r}")
            raw[key] = (value, line_no)

    fields_out: dict = {}
    n = 1
    if "n" in raw:
        n = _parse_number("n", raw["n"][0], raw["n"][1], int)
        _check_domains("n", n, raw["n"][1])
        fields_out["n"] = n

    if "rho" in raw and ("rho1" in raw or "rho2" in raw):
        raise ConfigError("rho cannot be combined with rho1/rho2")
    for key in ("rho", "rho1", "rho2"):
        if key not in raw:
            continue
        value = _parse_number(key, raw[key][0], raw[key][1])
        _check_domains(key, value, raw[key][1])
        if key == "rho":
            fields_out["rho1"] = fields_out["rho2"] = value
        else:
            fields_out[key] = value

    for key in _RELAY_KEYS:
        if key not in raw:
            continue
        text_value, line_no = raw[key]
        parts = [p for p in text_value.split(",") if p.strip()]
        values = tuple(_parse_number(key, p.strip(), line_no) for p in parts)
        for v in values:
            _check_domains(key, v, line_no)
        if len(values) == 1:
            values = values * n
        elif len(values) != n:
            raise ConfigError(
                f"line {line_no}: {key} has {len(values)} entries for n={n}")
        fields_out[key] = values

    for key in sorted(_FLOAT_KEYS | (_INT_KEYS - {"n"})):
        if key not in raw:
            continue
        value, line_no = raw[key]
        kind = int if key in _INT_KEYS else float
        parsed = _parse_number(key, value, line_no, kind)
        _check_domains(key, parsed, line_no)
        fields_out[key] = parsed

    scenario = Scenario(**fields_out)
    # broadcast defaults for relay keys not given (defaults are width 1)
    fixes = {}
    for key in _RELAY_KEYS:
        current = getattr(scenario, key)
        if len(current) != scenario.n:
            if len(current) == 1:
                fixes[key] = current * scenario.n
            else:
                raise ConfigError(
                    f"{key} has {len(current)} entries for n={scenario.n}")
    if fixes:
        scenario = replace(scenario, **fixes)
    scenario.network_config()   # surface domain errors eagerly
    scenario.mac_profile()
    scenario.power_profile()
    return scenario


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario_text(fh.read())


def parse_scenario(source: str) -> Scenario:
    """Accept a path or inline key=value text."""
    if "=" not in source and "\n" not in source:
        if source and not os.path.exists(source):
            raise ConfigError(f"no such scenario file: {source}")
        return load_scenario(source) if source else Scenario()
    return parse_scenario_text(source)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_scenario(scenario: Scenario) -> str:
    """Key=value document; parse(emit(s)) == s."""
    lines = [f"n = {scenario.n}"]
    if scenario.rho1 == scenario.rho2:
        lines.append(f"rho = {_fmt(scenario.rho1)}")
    else:
        lines.append(f"rho1 = {_fmt(scenario.rho1)}")
        lines.append(f"rho2 = {_fmt(scenario.rho2)}")
    for key in _RELAY_KEYS:
        values = getattr(scenario, key)
        lines.append(f"{key} = " + ",".join(_fmt(v) for v in values))
    for key in ("gamma_star_db", "mu_ab_db"):
        lines.append(f"{key} = {_fmt(getattr(scenario, key))}")
    if scenario.sigma_ab_db is not None:
        lines.append(f"sigma_ab_db = {_fmt(scenario.sigma_ab_db)}")
    for key in ("payload_bytes", "mac_header_bytes", "phy_header_us",
                "slot_us", "sifs_us", "difs_us", "timeout_us",
                "data_rate_bps", "ctrl_rate_bps", "ctrl_frame_bytes",
                "t_onc_us", "cw_min", "backoff_stages", "p_tx_mw", "p_rx_mw",
                "p_idle_mw", "rounds", "seed", "quadrature_n", "enum_cap",
                "workers"):
        lines.append(f"{key} = {_fmt(getattr(scenario, key))}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SweepSpec:
    """One swept axis over a fixed base scenario."""

    axis: str
    values: tuple
    fixed: Scenario = field(default_factory=Scenario)

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigError(
                f"sweep axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        values = tuple(self.values)
        if not values:
            raise ConfigError("sweep values must be nonempty")
        for v in values:
            if self.axis == "rho" and not 0.0 <= v < 1.0:
                raise ConfigError(f"rho value {v} outside [0, 1)")
            if self.axis == "sigma" and v < 0:
                raise ConfigError(f"sigma value {v} must be >= 0")
            if self.axis == "n" and (int(v) != v or v < 1):
                raise ConfigError(f"n value {v} must be a positive integer")
        object.__setattr__(self, "values", values)

    def scenarios(self):
        base = self.fixed
        for v in self.values:
            if self.axis == "rho":
                yield v, replace(base, rho1=float(v), rho2=float(v))
            elif self.axis == "sigma":
                s = float(v)
                yield v, replace(base, sigma_ar_db=(s,) * base.n,
                                 sigma_br_db=(s,) * base.n)
            elif self.axis == "mu":
                m = float(v)
                yield v, replace(base, mu_ar_db=(m,) * base.n,
                                 mu_br_db=(m,) * base.n)
            else:  # n
                k = int(v)
                yield v, replace(
                    base, n=k,
                    mu_ar_db=_stretch(base.mu_ar_db, k, "mu_ar_db"),
                    sigma_ar_db=_stretch(base.sigma_ar_db, k, "sigma_ar_db"),
                    mu_br_db=_stretch(base.mu_br_db, k, "mu_br_db"),
                    sigma_br_db=_stretch(base.sigma_br_db, k, "sigma_br_db"))


def _stretch(values: tuple, k: int, key: str) -> tuple:
    unique = set(values)
    if len(unique) != 1:
        raise ConfigError(
            f"an n sweep needs homogeneous {key} (got {values})")
    return (values[0],) * k
