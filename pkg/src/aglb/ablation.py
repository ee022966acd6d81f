"""Matched-seed ablation of the three AdaGRPO mechanisms.

For one seed the protocol is:

1. Generate a heavy-tailed evaluation suite and a disjoint, fully solvable
   warm-up suite from seeds derived from the run seed.
2. Warm up a policy on the warm-up suite with shaping and replay on and the
   curriculum off (the warm-up suite has no dead tasks to filter). The zero
   policy solves almost nothing beyond the trivial tier, so every learnable
   task would look like a persistent failure to the failure filter; the warm
   start plays the role of the supervised starting point a GUI agent would
   have. Plain GRPO as the warm-up sometimes collapses to a near-zero policy.
3. From that shared starting point train the full method (``full``) on the
   evaluation suite, along with two ablations: shortest-path shaping off
   (``nospa``) and every mechanism off (``plain``).
4. Evaluate each final policy with the same seeded episodes.

The verdicts are

* ``full_beats_plain``: full success rate >= plain success rate;
* ``spa_shorter``: over tasks that both ``full`` and ``nospa`` solve, the
  mean successful-episode length of ``full`` is strictly smaller;
* ``fcf_saves_budget``: rollouts that ``full`` spends on unsolvable tasks are
  at most half of those spent by ``plain``, which samples uniformly.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Optional

from .adagrpo import TrainConfig, Trainer
from .env import SuiteConfig, generate_suite
from .evalkit import EvalReport, evaluate, paired_success_steps
from .policy import PolicyParams
from .runtime import splitmix64

log = logging.getLogger(__name__)

HEAVY_TAILED = {"trivial": 40, "easy": 60, "medium": 50, "hard": 20, "unsolvable": 30}
WARMUP_COUNTS = {"trivial": 40, "easy": 60, "medium": 50, "hard": 20}


@dataclass(frozen=True)
class AblationConfig:
    counts: dict = field(default_factory=lambda: dict(HEAVY_TAILED))
    warmup_counts: dict = field(default_factory=lambda: dict(WARMUP_COUNTS))
    iterations: int = 60
    warmup_iterations: int = 100
    group_size: int = 8
    tasks_per_iteration: int = 32
    epoch_length: int = 4
    eval_trials: int = 4
    eval_seed: int = 99
    workers: int = 1
    backend: str = "process"

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            group_size=self.group_size,
            tasks_per_iteration=self.tasks_per_iteration,
            iterations=self.iterations,
            epoch_length=self.epoch_length,
            seed=seed,
        )


@dataclass
class VariantResult:
    name: str
    report: EvalReport
    success_rate: float
    unsolvable_rollouts: int


@dataclass
class SeedOutcome:
    seed: int
    warm_start_success: float
    variants: dict = field(default_factory=dict)  # name -> VariantResult
    steps_full: Optional[float] = None
    steps_nospa: Optional[float] = None
    paired_tasks: int = 0

    @property
    def full_beats_plain(self) -> bool:
        return self.variants["full"].success_rate >= self.variants["plain"].success_rate

    @property
    def spa_shorter(self) -> bool:
        if self.paired_tasks == 0:
            return False
        return self.steps_full < self.steps_nospa

    @property
    def fcf_saves_budget(self) -> bool:
        return 2 * self.variants["full"].unsolvable_rollouts <= self.variants["plain"].unsolvable_rollouts

    def line(self) -> str:
        v = self.variants

        def fmt(x: Optional[float]) -> str:
            return "n/a" if x is None else f"{x:.2f}"

        return (
            f"seed {self.seed}: success full {v['full'].success_rate:.3f} "
            f"plain {v['plain'].success_rate:.3f} nospa {v['nospa'].success_rate:.3f} | "
            f"steps full {fmt(self.steps_full)} nospa {fmt(self.steps_nospa)} over {self.paired_tasks} tasks | "
            f"unsolvable rollouts full {v['full'].unsolvable_rollouts} plain {v['plain'].unsolvable_rollouts}"
        )


def _sub_seed(seed: int, stream: int) -> int:
    return splitmix64((seed * 0x100 + stream) & (2**64 - 1)) >> 33


def warm_start(cfg: AblationConfig, seed: int) -> PolicyParams:
    suite = generate_suite(SuiteConfig(counts=cfg.warmup_counts), _sub_seed(seed, 1))
    tc = dataclasses.replace(cfg.train_config(_sub_seed(seed, 2)), iterations=cfg.warmup_iterations).ablate("fcf")
    trainer = Trainer(suite, tc, workers=cfg.workers, backend=cfg.backend)
    trainer.run()
    return trainer.state.policy


def run_seed(seed: int, cfg: AblationConfig = AblationConfig()) -> SeedOutcome:
    suite = generate_suite(SuiteConfig(counts=cfg.counts), _sub_seed(seed, 0))
    init = warm_start(cfg, seed) if cfg.warmup_iterations > 0 else None

    def _eval(policy: PolicyParams) -> EvalReport:
        return evaluate(
            policy, suite, trials=cfg.eval_trials, seed=cfg.eval_seed, workers=cfg.workers, backend=cfg.backend
        )

    base = cfg.train_config(seed)
    start = _eval(init).success_rate() if init is not None else 0.0
    out = SeedOutcome(seed, start)
    for name, tc in (("full", base), ("nospa", base.ablate("spa")), ("plain", base.ablate("all"))):
        trainer = Trainer(suite, tc, workers=cfg.workers, backend=cfg.backend, policy=init)
        trainer.run()
        report = _eval(trainer.state.policy)
        spent = sum(m["unsolvable_rollouts"] for m in trainer.history)
        out.variants[name] = VariantResult(name, report, report.success_rate(), spent)
        log.info("seed %d %s success %.3f", seed, name, report.success_rate())
    out.steps_full, out.steps_nospa, out.paired_tasks = paired_success_steps(
        out.variants["full"].report, out.variants["nospa"].report
    )
    return out
