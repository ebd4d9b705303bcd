"""Simulation configuration: a versioned YAML mapping validated into :class:`SimConfig`.

Example::

    schema_version: 1
    scenario: uncoded-rs-scma     # coded-rs-scma | scma-baseline | qpsk-baseline
    codebook: bundled:6x4         # or a path to a codebook file
    alpha: 0.5
    N: 4                          # symbols per user per frame (uncoded)
    ebn0_db: [0, 5, 10, 15]
    channel: rayleigh             # awgn
    sic: soft                     # hard (uncoded only)
    receiver: rx1                 # rx2 (coded only)
    ldpc_common: bundled:ldpc_n256_k120
    ldpc_private: bundled:ldpc_n256_k120
    mpa_iterations: 10
    bp_max_iters: 50
    min_errors: 100
    max_trials: 10000000
    seed: 1
    chunk_size: 64                # frames per batch; the stop rule is checked per batch
    pc: null                      # fixed P_c; null uses the max-min-fair table
    noise_var: null               # fixed complex noise variance overriding Eb/N0
    residual_noise: false         # add the soft-SIC residual variance to the MPA noise
    per_user: false               # add per-user error columns to the CSV
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from rsscma.channel import CHANNEL_KINDS
from rsscma.rate_split import SplitConfig

SCHEMA_VERSION = 1
SCENARIOS = ("uncoded-rs-scma", "coded-rs-scma", "scma-baseline", "qpsk-baseline")


class ConfigError(ValueError):
    """Invalid simulation configuration."""


@dataclass(frozen=True)
class SimConfig:
    scenario: str = "uncoded-rs-scma"
    codebook: str = "bundled:6x4"
    alpha: float = 0.5
    N: int = 4
    ebn0_db: tuple[float, ...] = (0.0,)
    channel: str = "rayleigh"
    sic: str = "soft"
    receiver: str = "rx1"
    ldpc_common: str = "bundled:ldpc_n256_k120"
    ldpc_private: str = "bundled:ldpc_n256_k120"
    mpa_iterations: int = 10
    bp_max_iters: int = 50
    min_errors: int = 100
    max_trials: int = 10_000_000
    seed: int = 0
    chunk_size: int = 64
    pc: float | None = None
    noise_var: float | None = None
    residual_noise: bool = False
    per_user: bool = False
    schema_version: int = field(default=SCHEMA_VERSION)

    def __post_init__(self):
        object.__setattr__(self, "ebn0_db", tuple(float(x) for x in self.ebn0_db))
        self.validate()

    def validate(self) -> None:
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}; expected {SCHEMA_VERSION}")
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.channel not in CHANNEL_KINDS:
            raise ConfigError(f"channel must be one of {CHANNEL_KINDS}, got {self.channel!r}")
        if self.sic not in ("soft", "hard"):
            raise ConfigError(f"sic must be 'soft' or 'hard', got {self.sic!r}")
        if self.receiver not in ("rx1", "rx2"):
            raise ConfigError(f"receiver must be 'rx1' or 'rx2', got {self.receiver!r}")
        if not self.ebn0_db:
            raise ConfigError("ebn0_db sweep must not be empty")
        for name in ("mpa_iterations", "bp_max_iters", "min_errors", "max_trials", "chunk_size", "N"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.pc is not None and not 0.0 < self.pc <= 1.0:
            raise ConfigError("pc must lie in (0, 1]")
        if self.noise_var is not None and not self.noise_var > 0:
            raise ConfigError("noise_var must be positive")
        if self.scenario == "uncoded-rs-scma":
            try:
                SplitConfig(self.alpha, self.N, 2, 1)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["ebn0_db"] = list(self.ebn0_db)
        return d

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


def config_from_dict(d: dict) -> SimConfig:
    if not isinstance(d, dict):
        raise ConfigError("configuration must be a mapping")
    if "schema_version" not in d:
        raise ConfigError("configuration must declare schema_version")
    known = {f.name for f in dataclasses.fields(SimConfig)}
    unknown = sorted(set(d) - known)
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {', '.join(unknown)}")
    d = dict(d)
    if "ebn0_db" in d and not isinstance(d["ebn0_db"], (list, tuple)):
        d["ebn0_db"] = [d["ebn0_db"]]
    try:
        return SimConfig(**d)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def load_config(path) -> SimConfig:
    """Read a YAML configuration file.  I/O problems raise ``OSError``."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return config_from_dict(data)
