"""Run configuration: flat ``section.key = value`` files plus named presets."""

from __future__ import annotations

import dataclasses
import enum
from decimal import Decimal
from dataclasses import dataclass, field
from pathlib import Path

from .noise_models import HardwareParams


class ConfigError(ValueError):
    pass


class Scheme(str, enum.Enum):
    USER_SERVER = "user_server"
    SYMMETRIC = "symmetric"
    ASYMMETRIC = "asymmetric"


class Acceptance(str, enum.Enum):
    STATIC = "static"
    DNN = "dnn"


@dataclass(frozen=True)
class RunConfig:
    hardware: HardwareParams = field(default_factory=HardwareParams)
    lam: int = 500
    distances: tuple[float, ...] = (1.0,)
    # seconds
    wait_times: tuple[float, ...] = (1e-6,)
    replicates: int = 6
    seed: int = 20240501
    scheme: Scheme = Scheme.USER_SERVER
    acceptance: Acceptance = Acceptance.STATIC
    attacker: bool = False
    mu: float = 0.6
    n_users: int = 3000
    n_attackers: int = 3000
    epochs: int = 100
    val_fraction: float = 0.2
    select_architecture: bool = False
    lost_policy: str = "substitute"
    out: str = "results.csv"

    def __post_init__(self):
        object.__setattr__(self, "distances", tuple(float(d) for d in self.distances))
        object.__setattr__(self, "wait_times", tuple(float(t) for t in self.wait_times))
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "acceptance", Acceptance(self.acceptance))
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")
        if self.lam < 1:
            raise ConfigError("lambda must be at least 1")
        if not self.distances or not self.wait_times:
            raise ConfigError("distances and wait times must be non-empty")
        if any(d < 0 for d in self.distances) or any(t < 0 for t in self.wait_times):
            raise ConfigError("distances and wait times must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.lost_policy not in ("substitute", "discard"):
            raise ConfigError(f"unknown lost_policy {self.lost_policy!r}")

    def replace(self, **changes) -> "RunConfig":
        try:
            return dataclasses.replace(self, **changes)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


PRESETS = {
    "default": {},
    "noiseless": {"hardware": HardwareParams.noiseless()},
    "storage-sweep": {"lam": 500, "distances": tuple(float(d) for d in range(11)),
             "wait_times": (0.0, 1e-6, 5e-6, 10e-6, 15e-6), "replicates": 6},
    "classifier-point": {"lam": 100, "distances": (10.0,), "wait_times": (1e-6,)},
    "attacker": {"hardware": HardwareParams.noiseless(), "lam": 10_000, "attacker": True},
}


def preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return RunConfig(**PRESETS[name])


_RUN_KEYS = {
    "lambda": ("lam", int),
    "distances_km": ("distances", lambda v: tuple(float(x) for x in _split(v))),
    "wait_times_us": ("wait_times", lambda v: tuple(us_to_s(x) for x in _split(v))),
    "replicates": ("replicates", int),
    "seed": ("seed", int),
    "scheme": ("scheme", Scheme),
    "acceptance": ("acceptance", Acceptance),
    "attacker": ("attacker", lambda v: _bool(v)),
    "mu": ("mu", float),
    "n_users": ("n_users", int),
    "n_attackers": ("n_attackers", int),
    "epochs": ("epochs", int),
    "val_fraction": ("val_fraction", float),
    "select_architecture": ("select_architecture", lambda v: _bool(v)),
    "lost_policy": ("lost_policy", str),
    "out": ("out", str),
}


def us_to_s(text: str) -> float:
    """Microseconds (decimal text) to seconds, rounded once."""
    try:
        return float(Decimal(text.strip()).scaleb(-6))
    except ArithmeticError:
        raise ValueError(f"not a number: {text!r}") from None


def s_to_us(t: float) -> str:
    # exact decimal shift of the shortest repr, so us_to_s(s_to_us(t)) == t
    return str(Decimal(repr(float(t))).scaleb(6).normalize())


def _split(v: str) -> list[str]:
    return [x for x in v.replace(" ", "").split(",") if x]


def _bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Apply ``hardware.<field>`` and ``run.<key>`` assignments on top of ``base``."""
    base = base or RunConfig()
    hw_changes, run_changes = {}, {}
    hw_types = {f.name: f.type for f in dataclasses.fields(HardwareParams)}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        section, _, name = key.partition(".")
        try:
            if section == "hardware" and name in hw_types:
                hw_changes[name] = _bool(value) if name == "ideal_memory" else float(value)
            elif section == "run" and name in _RUN_KEYS:
                attr, conv = _RUN_KEYS[name]
                run_changes[attr] = conv(value)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    try:
        hardware = base.hardware.with_(**hw_changes) if hw_changes else base.hardware
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return base.replace(hardware=hardware, **run_changes)


def load_config(path: str | Path, base: RunConfig | None = None) -> RunConfig:
    return parse_config(Path(path).read_text(), base)


def dump_config(cfg: RunConfig) -> str:
    """Serialize a config in the format read by :func:`parse_config`."""
    lines = [f"hardware.{name} = {getattr(cfg.hardware, name)!r}"
             for name in HardwareParams.field_names()]
    inverse = {attr: key for key, (attr, _) in _RUN_KEYS.items()}
    for attr, key in inverse.items():
        v = getattr(cfg, attr)
        if attr == "distances":
            v = ",".join(repr(x) for x in v)
        elif attr == "wait_times":
            v = ",".join(s_to_us(x) for x in v)
        elif isinstance(v, enum.Enum):
            v = v.value
        lines.append(f"run.{key} = {v}")
    return "\n".join(lines) + "\n"
