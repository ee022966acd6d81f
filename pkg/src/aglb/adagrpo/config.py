"""Training configuration.

Defaults: clip 0.2, KL 0.001, length penalty 1.0, 16 samples per task,
buffer 256, replay share 1.0, insertion share 0.25, gradient clip 1.0,
50 turns, temperature 1.0. The learning rate is a desk-scale value for a
linear policy.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass

from ..policy import DEFAULT_DIM, DEFAULT_K


@dataclass(frozen=True)
class TrainConfig:
    group_size: int = 16
    tasks_per_iteration: int = 16
    clip_epsilon: float = 0.2
    kl_beta: float = 0.001
    spa_alpha: float = 1.0
    kappa: float = 0.25
    buffer_capacity: int = 256
    replay_gamma: float = 1.0
    replay_fraction: float = 0.25
    replay_reuse_cap: int = 2
    prune_negatives: bool = True
    fcf_enabled: bool = True
    learning_rate: float = 0.05
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    grad_clip_norm: float = 1.0
    temperature: float = 1.0
    horizon: int = 50
    iterations: int = 60
    epoch_length: int = 4
    dim: int = DEFAULT_DIM
    k: int = DEFAULT_K
    seed: int = 0
    checkpoint_every: int = 0

    def __post_init__(self):
        # spa_alpha == 0 and replay_fraction == 0 are the ablation settings
        checks = [
            ("group_size", self.group_size >= 2, "must be >= 2"),
            ("tasks_per_iteration", self.tasks_per_iteration >= 1, "must be >= 1"),
            ("clip_epsilon", 0.0 < self.clip_epsilon < 1.0, "must lie in (0, 1)"),
            ("kl_beta", self.kl_beta >= 0.0, "must be >= 0"),
            ("spa_alpha", 0.0 <= self.spa_alpha <= 1.0, "must lie in [0, 1]"),
            ("kappa", 0.0 < self.kappa <= 1.0, "must lie in (0, 1]"),
            ("buffer_capacity", self.buffer_capacity >= 0, "must be >= 0"),
            ("replay_gamma", 0.0 < self.replay_gamma <= 1.0, "must lie in (0, 1]"),
            ("replay_fraction", 0.0 <= self.replay_fraction <= 1.0, "must lie in [0, 1]"),
            ("replay_reuse_cap", self.replay_reuse_cap >= 1, "must be >= 1"),
            ("learning_rate", self.learning_rate > 0.0, "must be > 0"),
            ("grad_clip_norm", self.grad_clip_norm > 0.0, "must be > 0"),
            ("temperature", self.temperature > 0.0, "must be > 0"),
            ("horizon", self.horizon >= 1, "must be >= 1"),
            ("iterations", self.iterations >= 0, "must be >= 0"),
            ("epoch_length", self.epoch_length >= 1, "must be >= 1"),
            ("dim", self.dim >= 1, "must be >= 1"),
            ("k", self.k >= 1, "must be >= 1"),
        ]
        for name, ok, msg in checks:
            if not ok:
                raise ValueError(f"{name}: {msg}")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def ablate(self, *mechanisms: str) -> "TrainConfig":
        """Switch off ``spa``, ``adapr``, ``fcf`` (or ``all``)."""
        wanted = set(mechanisms)
        if "all" in wanted:
            wanted = {"spa", "adapr", "fcf"}
        unknown = wanted - {"spa", "adapr", "fcf"}
        if unknown:
            raise ValueError(f"unknown mechanism(s): {sorted(unknown)}")
        changes: dict = {}
        if "spa" in wanted:
            changes["spa_alpha"] = 0.0
        if "adapr" in wanted:
            changes["replay_fraction"] = 0.0
            changes["prune_negatives"] = False
        if "fcf" in wanted:
            changes["fcf_enabled"] = False
        return dataclasses.replace(self, **changes)


def config_hash(d: dict) -> str:
    canon = json.dumps(d, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]
