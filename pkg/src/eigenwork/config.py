"""Experiment configuration: schema-checked, JSON-backed, preset-aware.

A config snapshot is written into every run directory; unknown keys are
rejected so stale or misspelled fields fail loudly instead of silently
changing an archive's meaning.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .model import PRESETS, SHELL_DEFAULT
from .optimizer import RewardParams

FORMAT_TAG = "eigenwork-run-v1"

MODES = ("optimize", "quench", "discrete")

L_CI_CAP = 14

DEFAULT_DT = {"optimize": 0.002, "quench": 0.02, "discrete": 0.04}
DEFAULT_DURATION = {"optimize": 1.0, "quench": 10.0}


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration (CLI exit code 2)."""


_REWARD_KEYS = {"a", "c", "epsilon", "delta"}
_TOP_KEYS = {
    "L", "h", "g", "preset", "shell_lo", "shell_hi", "mode", "k",
    "quench_h", "quench_g", "actions", "reward", "dpos_epsilon",
    "dt", "duration", "kick_duration", "sample_every", "outdir", "long_run",
}


@dataclass
class ExperimentConfig:
    L: int
    h: float
    g: float
    mode: str
    shell_lo: float = SHELL_DEFAULT[0]
    shell_hi: float = SHELL_DEFAULT[1]
    k: int | None = None
    quench_h: float | None = None
    quench_g: float | None = None
    actions: list = field(default_factory=list)
    reward: RewardParams = field(default_factory=RewardParams)
    dpos_epsilon: float | None = None
    dt: float | None = None
    duration: float | None = None
    kick_duration: float | None = None
    sample_every: int = 10
    outdir: str = "runs/run"
    long_run: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.L < 2:
            raise ConfigError("L must be at least 2")
        if self.L % 2:
            raise ConfigError("half-chain diagnostics need even L")
        if self.L > L_CI_CAP and not self.long_run:
            raise ConfigError(
                f"L={self.L} exceeds the desk-scale cap {L_CI_CAP}; "
                "set long_run=true to accept an hours-long run")
        if not self.shell_lo < self.shell_hi:
            raise ConfigError("shell bounds must satisfy lo < hi")
        if self.dpos_epsilon is None:
            self.dpos_epsilon = self.reward.epsilon
        if self.dt is None:
            self.dt = DEFAULT_DT[self.mode]
        if self.mode == "discrete":
            if not self.actions:
                raise ConfigError("discrete mode needs an action sequence")
            if any(not 0 <= a < 7 for a in self.actions):
                raise ConfigError("action indices must lie in [0, 7)")
            self.duration = len(self.actions) * self.dt
        elif self.duration is None:
            self.duration = DEFAULT_DURATION[self.mode]
        if self.kick_duration is None:
            self.kick_duration = 0.001 if self.mode == "optimize" else 0.0
        if self.mode == "optimize":
            if self.k is None:
                raise ConfigError("optimize mode needs the control locality k")
            if not 1 <= self.k <= self.L:
                raise ConfigError(f"k={self.k} outside [1, L]")
        if self.mode == "quench":
            if self.quench_h is None or self.quench_g is None:
                self.quench_h, self.quench_g = PRESETS["quench-target"]
        if self.sample_every < 1:
            raise ConfigError("sample_every must be a positive step count")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        unknown = set(data) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        preset = data.pop("preset", None)
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(f"unknown preset {preset!r}; "
                                  f"expected one of {sorted(PRESETS)}")
            h, g = PRESETS[preset]
            data.setdefault("h", h)
            data.setdefault("g", g)
        if "h" not in data or "g" not in data or "L" not in data or "mode" not in data:
            raise ConfigError("config requires L, mode, and (h, g) or a preset")
        reward_data = data.pop("reward", {})
        if isinstance(reward_data, RewardParams):
            reward = reward_data
        else:
            unknown = set(reward_data) - _REWARD_KEYS
            if unknown:
                raise ConfigError(f"unknown reward keys: {sorted(unknown)}")
            try:
                reward = RewardParams(**reward_data)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        try:
            return cls(reward=reward, **data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["reward"] = asdict(self.reward)
        return data

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def preset_name(self) -> str:
        for name, (h, g) in PRESETS.items():
            if name != "quench-target" and (self.h, self.g) == (h, g):
                return name
        return "custom"
