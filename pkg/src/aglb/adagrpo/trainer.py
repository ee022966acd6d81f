"""One training iteration and the run loop around it."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from ..domain import TaskRef, Trajectory
from ..env import Suite
from ..policy import PolicyParams, save_checkpoint
from ..runtime import RolloutRuntime, splitmix64
from .config import TrainConfig, config_hash
from .fcf import SchedulerState, fcf_sample_tasks, fcf_update
from .grpo import AdamState, adam_step, group_advantages, spa_rewards, surrogate_loss_and_grad
from .replay import ReplayBuffer, buffer_draw, buffer_insert, prune_negatives

log = logging.getLogger(__name__)

METRIC_FIELDS = (
    "iter",
    "epoch",
    "tasks_sampled",
    "frac_unsolvable_sampled",
    "unsolvable_rollouts",
    "mean_reward",
    "success_rate",
    "mean_success_len",
    "buffer_size",
    "replayed_count",
    "pruned_negatives",
    "active_tasks",
    "cooldown_tasks",
    "removed_tasks",
    "loss",
    "clip_frac",
    "mean_kl",
    "mean_entropy",
    "grad_norm",
)


@dataclass
class GroupResult:
    task: TaskRef
    trajectories: list
    spa_rewards: list
    advantages: np.ndarray
    degenerate: bool

    @property
    def all_zero(self) -> bool:
        return not any(t.success for t in self.trajectories)


@dataclass
class TrainerState:
    policy: PolicyParams
    ref_policy: PolicyParams
    optimizer: AdamState
    buffer: ReplayBuffer
    scheduler: SchedulerState
    iteration: int = 0
    epoch_outcomes: dict = field(default_factory=dict)

    @classmethod
    def initial(cls, suite: Suite, cfg: TrainConfig, policy: Optional[PolicyParams] = None) -> "TrainerState":
        policy = policy.copy() if policy is not None else PolicyParams.zeros(cfg.dim, cfg.k)
        return cls(
            policy=policy,
            ref_policy=policy.snapshot(),
            optimizer=AdamState.zeros(policy.dim),
            buffer=ReplayBuffer(cfg.buffer_capacity),
            scheduler=SchedulerState.fresh([t.task_id for t in suite.refs]),
        )


def score_group(task: TaskRef, trajectories: list[Trajectory], alpha: float) -> GroupResult:
    spa = spa_rewards(trajectories, alpha)
    adv, degenerate = group_advantages(spa)
    return GroupResult(task, trajectories, spa, adv, degenerate)


def _iteration_rng(seed: int, iteration: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), (iteration << 8) | stream]))


def train_iteration(
    state: TrainerState,
    suite: Suite,
    cfg: TrainConfig,
    runtime: RolloutRuntime,
) -> tuple[TrainerState, dict]:
    """Sample tasks, roll out, score, update. ``state`` is not mutated; on
    any error the caller keeps the previous state."""
    it = state.iteration + 1
    epoch = (it - 1) // cfg.epoch_length + 1
    ids = [t.task_id for t in suite.refs]
    available = sum(1 for t in ids if cfg.fcf_enabled is False or state.scheduler.weight(t) > 0)
    n = min(cfg.tasks_per_iteration, available)
    task_ids = fcf_sample_tasks(state.scheduler, ids, n, _iteration_rng(cfg.seed, it, 0), uniform=not cfg.fcf_enabled)

    rollout_seed = splitmix64(splitmix64(cfg.seed & (2**64 - 1)) ^ it)
    groups_raw = runtime.run_groups(task_ids, state.policy.snapshot(), cfg.group_size, rollout_seed, cfg.horizon, cfg.temperature)
    refs = [suite.ref(t) for t in task_ids]
    groups = [score_group(ref, trajs, cfg.spa_alpha) for ref, trajs in zip(refs, groups_raw)]

    outcomes = dict(state.epoch_outcomes)
    for g in groups:
        outcomes[g.task.task_id] = outcomes.get(g.task.task_id, True) and g.all_zero

    fresh = [(t, float(a)) for g in groups if not g.degenerate for t, a in zip(g.trajectories, g.advantages)]
    buffer = state.buffer.copy()
    replayed = buffer_draw(buffer, len(fresh), cfg.replay_fraction, cfg.replay_gamma, cfg.replay_reuse_cap)
    batch = fresh + replayed
    pruned = 0
    if cfg.prune_negatives:
        batch, pruned = prune_negatives(batch, _iteration_rng(cfg.seed, it, 1))

    loss, grad, stats = surrogate_loss_and_grad(
        batch,
        state.policy,
        state.ref_policy,
        cfg.clip_epsilon,
        cfg.kl_beta,
        cfg.temperature,
        cfg.grad_clip_norm,
    )
    policy, optimizer = state.policy, state.optimizer
    if batch:
        policy, optimizer = adam_step(
            policy, grad, optimizer, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps
        )
    buffer_insert(buffer, fresh, cfg.kappa)

    scheduler = state.scheduler
    if it % cfg.epoch_length == 0:
        scheduler = fcf_update(scheduler, outcomes)
        outcomes = {}

    all_trajs = [t for g in groups for t in g.trajectories]
    succ_lens = [t.length for t in all_trajs if t.success]
    unsolvable = sum(1 for r in refs if r.tier == "unsolvable")
    counts = scheduler.counts()
    metrics = {
        "iter": it,
        "epoch": epoch,
        "tasks_sampled": len(task_ids),
        "frac_unsolvable_sampled": unsolvable / len(task_ids) if task_ids else 0.0,
        "unsolvable_rollouts": unsolvable * cfg.group_size,
        "mean_reward": float(np.mean([r for g in groups for r in g.spa_rewards])) if groups else 0.0,
        "success_rate": float(np.mean([t.terminal_reward for t in all_trajs])) if all_trajs else 0.0,
        "mean_success_len": float(np.mean(succ_lens)) if succ_lens else None,
        "buffer_size": len(buffer),
        "replayed_count": len(replayed),
        "pruned_negatives": pruned,
        "active_tasks": counts["active"],
        "cooldown_tasks": counts["cooldown"],
        "removed_tasks": counts["removed"],
        "loss": loss,
        "clip_frac": stats.clip_frac,
        "mean_kl": stats.mean_kl,
        "mean_entropy": stats.mean_entropy,
        "grad_norm": stats.grad_norm,
    }
    new_state = TrainerState(policy, state.ref_policy, optimizer, buffer, scheduler, it, outcomes)
    return new_state, metrics


class Trainer:
    """Runs ``cfg.iterations`` iterations, streaming metrics to a run directory.

    ``metrics.jsonl`` is deterministic for a given (suite, config); wall-clock
    times go to ``timing.jsonl`` next to it.
    """

    def __init__(
        self,
        suite: Suite,
        cfg: TrainConfig,
        workers: int = 1,
        backend: str = "process",
        out_dir: Optional[Path] = None,
        policy: Optional[PolicyParams] = None,
        extra_config: Optional[dict] = None,
    ):
        self.suite = suite
        self.cfg = cfg
        self.workers = workers
        self.backend = backend
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.state = TrainerState.initial(suite, cfg, policy)
        self.history: list[dict] = []
        self.resolved = {"train": cfg.to_dict(), **(extra_config or {})}
        self.config_hash = config_hash(self.resolved)

    def run(self, on_iteration: Optional[Callable[[dict], None]] = None) -> TrainerState:
        metrics_fh = timing_fh = None
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            resolved = {**self.resolved, "config_hash": self.config_hash}
            (self.out_dir / "resolved_config.json").write_text(json.dumps(resolved, sort_keys=True, indent=2) + "\n")
            metrics_fh = open(self.out_dir / "metrics.jsonl", "w")
            timing_fh = open(self.out_dir / "timing.jsonl", "w")
        try:
            with RolloutRuntime(self.suite, self.workers, self.backend) as rt:
                for _ in range(self.cfg.iterations):
                    t0 = time.perf_counter()
                    self.state, metrics = train_iteration(self.state, self.suite, self.cfg, rt)
                    wall_ms = (time.perf_counter() - t0) * 1000.0
                    self.history.append(metrics)
                    if metrics_fh is not None:
                        metrics_fh.write(json.dumps(metrics, sort_keys=True) + "\n")
                        metrics_fh.flush()
                        timing_fh.write(json.dumps({"iter": metrics["iter"], "wall_ms": round(wall_ms, 3)}) + "\n")
                        every = self.cfg.checkpoint_every
                        if every and metrics["iter"] % every == 0:
                            self.checkpoint(self.out_dir / f"checkpoint_{metrics['iter']:05d}.bin")
                    if on_iteration is not None:
                        on_iteration(metrics)
                    log.debug("iter %d success %.3f loss %.4f", metrics["iter"], metrics["success_rate"], metrics["loss"])
        finally:
            if metrics_fh is not None:
                metrics_fh.close()
                timing_fh.close()
        if self.out_dir is not None:
            self.checkpoint(self.out_dir / "checkpoint_final.bin")
        return self.state

    def checkpoint(self, path: Path) -> None:
        save_checkpoint(self.state.policy, path, self.cfg.seed, self.config_hash)
