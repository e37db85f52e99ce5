"""Run configuration: one flat record mirrored 1:1 by the config file format.

Config files are plain text, one ``key = value`` per line, ``#`` comments
and blank lines allowed.  Keys are exactly the RunConfig field names;
unknown keys are errors.  Booleans are ``true``/``false``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .agent import PAPER_SCALE_EPS_ANNEAL_STEPS, AgentConfig
from .errors import ConfigError
from .optim import OptimizerConfig
from .actions import ExtendedActionSpace

ENV_IDS = ("chain_persist", "toy_diver")
BACKENDS = ("tabular", "dense", "conv")

# Which backend can drive which environment: tabular agents need discrete
# state ids, network agents need array observations.
BACKEND_ENVS = {
    "tabular": ("chain_persist",),
    "dense": ("toy_diver",),
    "conv": ("toy_diver",),
}


@dataclass
class RunConfig:
    label: str = ""
    env: str = "chain_persist"
    backend: str = "tabular"
    r1: int = 1
    r2: int = 6
    static_skip: int = 0          # > 0 forces r1 = r2 = static_skip
    gamma: float = 0.99
    eps_start: float = 1.0
    eps_end: float = 0.1
    eps_anneal_steps: int = 50_000
    eps_test: float = 0.05
    discount_mode: str = "per_decision"
    batch_size: int = 32
    learn_start: int = 1_000
    target_sync_interval: int = 1_000
    replay_capacity: int = 10_000
    reward_clip: bool = False
    alpha: float = 1.0            # tabular learning rate
    learning_rate: float = 0.00025
    rms_decay: float = 0.95
    rms_epsilon: float = 0.01
    clip_mode: str = "td_error_clip"
    clip_value: float = 1.0
    hidden_units: int = 64
    train_epoch_steps: int = 5_000
    test_epoch_steps: int = 2_500
    epoch_count: int = 4
    seed: int = 0
    out_dir: str = "runs/out"
    record_timing: bool = False
    figures: bool = True

    def effective_r1(self) -> int:
        return self.static_skip if self.static_skip > 0 else self.r1

    def effective_r2(self) -> int:
        return self.static_skip if self.static_skip > 0 else self.r2

    def space_for(self, basis_count: int) -> ExtendedActionSpace:
        return ExtendedActionSpace(basis_count=basis_count, r1=self.effective_r1(), r2=self.effective_r2())

    def agent_config(self) -> AgentConfig:
        return AgentConfig(
            gamma=self.gamma,
            eps_start=self.eps_start,
            eps_end=self.eps_end,
            eps_anneal_steps=self.eps_anneal_steps,
            batch_size=self.batch_size,
            learn_start=self.learn_start,
            target_sync_interval=self.target_sync_interval,
            eps_test=self.eps_test,
            discount_mode=self.discount_mode,
            reward_clip=self.reward_clip,
        )

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(
            learning_rate=self.learning_rate,
            decay=self.rms_decay,
            epsilon_rms=self.rms_epsilon,
            clip_mode=self.clip_mode,
            clip_value=self.clip_value,
        )

    def validate(self) -> "RunConfig":
        if self.env not in ENV_IDS:
            raise ConfigError(f"unknown env {self.env!r}; choose from {ENV_IDS}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}; choose from {BACKENDS}")
        if self.env not in BACKEND_ENVS[self.backend]:
            raise ConfigError(
                f"backend {self.backend!r} cannot drive env {self.env!r}; "
                f"valid envs: {BACKEND_ENVS[self.backend]}"
            )
        for name in ("r1", "r2"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.static_skip < 0:
            raise ConfigError("static_skip must be >= 0 (0 disables static mode)")
        for name in ("train_epoch_steps", "test_epoch_steps", "replay_capacity", "hidden_units"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.epoch_count < 0:
            raise ConfigError("epoch_count must be >= 0")
        if self.alpha <= 0:
            raise ConfigError("alpha must be > 0")
        # delegate the rest to the component configs
        self.agent_config()
        self.optimizer_config()
        return self


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _convert(name: str, raw: str):
    ftype = _FIELDS[name].type
    raw = raw.strip()
    if ftype in ("bool", bool):
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected true/false, got {raw!r}")
    if ftype in ("int", int):
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{name}: expected an integer, got {raw!r}") from exc
    if ftype in ("float", float):
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{name}: expected a number, got {raw!r}") from exc
    return raw


def parse_config(text: str, base: RunConfig = None) -> RunConfig:
    """Parse config text into a RunConfig; unknown keys are errors."""
    cfg = dataclasses.replace(base) if base is not None else RunConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        setattr(cfg, key, _convert(key, value))
    return cfg


def load_config(path, base: RunConfig = None) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        return parse_config(text, base)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def format_config(cfg: RunConfig) -> str:
    lines = [f"{f.name} = {getattr(cfg, f.name)}" for f in dataclasses.fields(RunConfig)]
    return "\n".join(lines) + "\n"


def paper_scale(base: RunConfig = None) -> RunConfig:
    """Preset with the original large-scale protocol numbers.

    Not desk-runnable in reasonable time; provided so the schedule constants
    live in one place.
    """
    cfg = dataclasses.replace(base) if base is not None else RunConfig()
    cfg.r1 = 4
    cfg.r2 = 20
    cfg.eps_anneal_steps = PAPER_SCALE_EPS_ANNEAL_STEPS
    cfg.train_epoch_steps = 250_000
    cfg.test_epoch_steps = 125_000
    return cfg
