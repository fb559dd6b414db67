"""Experiment configuration: flat ``key = value`` files, flag overrides, validation."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .construction import DEFAULT_DESIGN_ERASURE, is_power_of_two
from .estimators import DEFAULT_DELTA
from .optimizer import DEFAULT_STEP, METHODS
from .straggler import DEFAULT_RATE, DEFAULT_SHIFT

OBJECTIVES = ("l1", "l2sq", "targeted_attack", "untargeted_attack")
STOPPING_RULES = ("first_decodable", "first_k", "all")
RUNTIME_DISTS = ("shifted_exponential", "empirical")
OPTIMIZERS = tuple(DEFAULT_STEP)


class ConfigError(ValueError):
    """A configuration problem, reported against the offending key."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


@dataclass
class ExperimentConfig:
    objective: str = "l1"
    matrix_file: str = ""  # empty: bundled fixture
    vector_file: str = ""
    model_dir: str = ""
    theta0_file: str = ""  # empty: drawn from the seed
    target_class: int = -1  # -1: drawn from the seed among non-predicted classes
    true_class: int = -1  # -1: the model's prediction at theta0
    attack_c: float = 0.1
    attack_kappa: float = 0.0
    attack_literal_eq14: bool = False
    method: str = "coded"
    d: int = 32
    N: int = 64
    design_erasure: float = DEFAULT_DESIGN_ERASURE
    delta: float = DEFAULT_DELTA
    optimizer: str = "gd"
    step_size: float | None = None  # None: per-optimizer default
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    freeze_diag: bool = False
    stopping_rule: str = "first_decodable"
    first_k: int = 16
    runtime_dist: str = "shifted_exponential"
    runtime_file: str = ""  # empty with empirical: bundled stand-in samples
    shift: float = DEFAULT_SHIFT
    rate: float = DEFAULT_RATE
    decode_cost: float = 0.0
    iterations: int = 100
    seed: int = 0
    output: str = "trace.csv"

    def resolved(self) -> "ExperimentConfig":
        cfg = dataclasses.replace(self)
        if cfg.step_size is None:
            cfg.step_size = DEFAULT_STEP.get(cfg.optimizer, 0.0)
        return cfg

    def validate(self) -> "ExperimentConfig":
        def choice(key, options):
            if getattr(self, key) not in options:
                raise ConfigError(key, f"must be one of {', '.join(options)}; got {getattr(self, key)!r}")

        choice("objective", OBJECTIVES)
        choice("method", METHODS)
        choice("optimizer", OPTIMIZERS)
        choice("stopping_rule", STOPPING_RULES)
        choice("runtime_dist", RUNTIME_DISTS)
        if not is_power_of_two(self.N):
            raise ConfigError("N", "N must be a power of two")
        if not 1 <= self.d <= self.N:
            raise ConfigError("d", f"need 1 <= d <= N, got d={self.d}, N={self.N}")
        if not 0.0 < self.design_erasure < 1.0:
            raise ConfigError("design_erasure", "must lie in (0, 1)")
        if not self.delta > 0:
            raise ConfigError("delta", "must be positive")
        if self.step_size is not None and not self.step_size > 0:
            raise ConfigError("step_size", "must be positive")
        if self.iterations < 1:
            raise ConfigError("iterations", "must be >= 1")
        if self.stopping_rule == "first_k":
            workers = self.d if self.method == "fd" else self.N
            if not 1 <= self.first_k <= workers:
                raise ConfigError("first_k", f"must lie in [1, {workers}]")
        if self.attack_c < 0:
            raise ConfigError("attack_c", "must be non-negative")
        if self.attack_kappa < 0:
            raise ConfigError("attack_kappa", "must be non-negative")
        if self.shift < 0:
            raise ConfigError("shift", "must be non-negative")
        if not self.rate > 0:
            raise ConfigError("rate", "must be positive")
        if self.decode_cost < 0:
            raise ConfigError("decode_cost", "must be non-negative")
        for key in ("matrix_file", "vector_file", "model_dir", "theta0_file", "runtime_file"):
            path = getattr(self, key)
            if path and not Path(path).exists():
                raise ConfigError(key, f"file not found: {path}")
        return self


FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def convert_value(key: str, text: str):
    if key not in FIELD_TYPES:
        raise ConfigError(key, "unknown key")
    kind = FIELD_TYPES[key]
    text = text.strip()
    try:
        if kind == "bool":
            low = text.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(text)
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "float | None":
            return None if text.lower() in ("", "none", "default") else float(text)
    except ValueError:
        raise ConfigError(key, f"cannot parse {text!r} as {kind}") from None
    return text


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        values[key] = convert_value(key, value)
    return values


def parse_config(file=None, overrides=None) -> ExperimentConfig:
    """Defaults, then the file, then ``overrides`` (already-typed flag values)."""
    values = {}
    if file is not None:
        values.update(read_config_file(file))
    for key, value in (overrides or {}).items():
        if key not in FIELD_TYPES:
            raise ConfigError(key, "unknown key")
        values[key] = convert_value(key, value) if isinstance(value, str) else value
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg.resolved()


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "default"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_config(cfg: ExperimentConfig, notes=()) -> str:
    lines = [f"# {note}" for note in notes]
    lines += [f"{f.name} = {_fmt(getattr(cfg, f.name))}" for f in fields(cfg)]
    return "\n".join(lines) + "\n"
