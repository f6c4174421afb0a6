"""Physical and scenario parameters, validation, and the plain-text config format.

All absolute powers are dBm, all ratios are dB, all times are microseconds.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Union

PROFILE_SUM_TOL = 1e-12


class ValidationError(ValueError):
    """Raised when one or more parameter invariants are violated.

    ``violations`` is a list of ``(field_name, constraint)`` pairs, one per
    violated invariant.
    """

    def __init__(self, violations: list[tuple[str, str]]):
        self.violations = list(violations)
        msg = "; ".join(f"{name}: {what}" for name, what in self.violations)
        super().__init__(msg)


@dataclass(frozen=True)
class RadioParams:
    tx_power_dbm: float = 30.0
    noise_density_dbm_hz: float = -174.0
    bandwidth_hz: float = 200e6
    snr_threshold_db: float = 10.0
    shadow_sigma_db: float = 5.0
    coverage_radius_m: float = 100.0

    def violations(self) -> list[tuple[str, str]]:
        out = []
        for name in ("tx_power_dbm", "noise_density_dbm_hz", "snr_threshold_db"):
            if not math.isfinite(getattr(self, name)):
                out.append((name, "must be finite"))
        if not self.bandwidth_hz > 0:
            out.append(("bandwidth_hz", "bandwidth_hz <= 0"))
        elif not math.isfinite(self.noise_density_dbm_hz + 10 * math.log10(self.bandwidth_hz)):
            out.append(("bandwidth_hz", "noise power is not finite"))
        if not self.shadow_sigma_db > 0:
            out.append(("shadow_sigma_db", "shadow_sigma_db <= 0"))
        if not self.coverage_radius_m > 0:
            out.append(("coverage_radius_m", "coverage_radius_m <= 0"))
        return out


@dataclass(frozen=True)
class ScenarioParams:
    density_per_m: float = 0.1
    span_m: float = 1000.0
    hop_distance_m: float = 50.0
    slot_time_us: float = 50.0
    proc_time_us: float = 20.0
    max_delay_us: float = 20000.0

    def violations(self) -> list[tuple[str, str]]:
        out = []
        for name in ("density_per_m", "span_m", "hop_distance_m", "slot_time_us", "max_delay_us"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                out.append((name, f"{name} <= 0"))
        if not (self.proc_time_us >= 0 and math.isfinite(self.proc_time_us)):
            out.append(("proc_time_us", "proc_time_us < 0"))
        return out

    def replace(self, **changes) -> "ScenarioParams":
        return validate(ScenarioParams(**{**asdict(self), **changes}))


@dataclass(frozen=True)
class ServiceProfile:
    """Delay/reliability preference of a service class: ``alpha`` weights
    connectivity, ``beta`` weights the delay indicator."""

    alpha: float = 0.5
    beta: float = 0.5

    def violations(self) -> list[tuple[str, str]]:
        out = []
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                out.append((name, f"{name} not in [0, 1]"))
        if not abs(self.alpha + self.beta - 1.0) <= PROFILE_SUM_TOL:
            out.append(("alpha,beta", "alpha+beta != 1"))
        return out


Params = Union[RadioParams, ScenarioParams, ServiceProfile]


def validate(params: Params) -> Params:
    """Return ``params`` unchanged if every invariant holds.

    Raises :class:`ValidationError` listing all violated invariants otherwise.
    """
    problems = params.violations()
    if problems:
        raise ValidationError(problems)
    return params


def noise_power_dbm(radio: RadioParams) -> float:
    """Thermal noise power over the channel bandwidth, in dBm."""
    return radio.noise_density_dbm_hz + 10.0 * math.log10(radio.bandwidth_hz)


# --- config file -----------------------------------------------------------

RADIO_KEYS = tuple(f.name for f in fields(RadioParams))
SCENARIO_KEYS = tuple(f.name for f in fields(ScenarioParams))
PROFILE_KEYS = tuple(f.name for f in fields(ServiceProfile))
CONFIG_KEYS = RADIO_KEYS + SCENARIO_KEYS + PROFILE_KEYS


@dataclass(frozen=True)
class Config:
    radio: RadioParams = RadioParams()
    scenario: ScenarioParams = ScenarioParams()
    profile: ServiceProfile = ServiceProfile()
    # keys that were not given explicitly and fell back to built-in defaults
    defaulted: tuple[str, ...] = ()

    def as_dict(self) -> dict[str, float]:
        return {**asdict(self.radio), **asdict(self.scenario), **asdict(self.profile)}


class ConfigError(ValueError):
    pass


def parse_config_text(text: str, source: str = "<config>") -> dict[str, float]:
    """Parse ``key = value`` lines into a dict. Comments start with ``#``."""
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            values[key] = float(value)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: {key} is not a number: {value!r}") from None
    return values


def parse_override(item: str) -> tuple[str, float]:
    key, sep, value = item.partition("=")
    key = key.strip()
    if not sep:
        raise ConfigError(f"override must look like key=value, got {item!r}")
    if key not in CONFIG_KEYS:
        raise ConfigError(f"unknown override key {key!r}")
    try:
        return key, float(value)
    except ValueError:
        raise ConfigError(f"override {key} is not a number: {value!r}") from None


def build_config(values: dict[str, float]) -> Config:
    """Assemble and validate a :class:`Config`; missing keys take defaults."""
    radio = RadioParams(**{k: values[k] for k in RADIO_KEYS if k in values})
    scenario = ScenarioParams(**{k: values[k] for k in SCENARIO_KEYS if k in values})
    profile = ServiceProfile(**{k: values[k] for k in PROFILE_KEYS if k in values})
    problems = radio.violations() + scenario.violations() + profile.violations()
    if problems:
        raise ValidationError(problems)
    defaulted = tuple(k for k in CONFIG_KEYS if k not in values)
    return Config(radio, scenario, profile, defaulted)


def load_config(path: Union[str, Path, None], overrides: tuple[str, ...] = ()) -> Config:
    """Read a config file (optional) and layer ``key=value`` overrides, last wins."""
    values: dict[str, float] = {}
    if path is not None:
        path = Path(path)
        values.update(parse_config_text(path.read_text(), str(path)))
    for item in overrides:
        key, value = parse_override(item)
        values[key] = value
    return build_config(values)


def format_config(config: Config) -> str:
    lines = []
    for key, value in config.as_dict().items():
        lines.append(f"{key} = {value!r}")
    return "\n".join(lines) + "\n"


def dump_config(config: Config, path: Union[str, Path]) -> None:
    Path(path).write_text(format_config(config))
