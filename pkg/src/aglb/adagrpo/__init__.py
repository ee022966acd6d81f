"""Difficulty-adaptive GRPO: reward shaping, advantages, the clipped
surrogate, positive replay, negative pruning and failure curriculum."""

from .fcf import Phase, SchedulerState, TaskStatus, fcf_sample_tasks, fcf_update, InsufficientTasks
from .grpo import (
    NonFiniteValue,
    AdamState,
    adam_step,
    group_advantages,
    spa_rewards,
    surrogate_loss_and_grad,
)
from .replay import BufferEntry, ReplayBuffer, buffer_draw, buffer_insert, prune_negatives
from .config import TrainConfig
from .trainer import GroupResult, Trainer, TrainerState, train_iteration

__all__ = [
    "AdamState",
    "BufferEntry",
    "GroupResult",
    "InsufficientTasks",
    "NonFiniteValue",
    "Phase",
    "ReplayBuffer",
    "SchedulerState",
    "TaskStatus",
    "TrainConfig",
    "Trainer",
    "TrainerState",
    "adam_step",
    "buffer_draw",
    "buffer_insert",
    "fcf_sample_tasks",
    "fcf_update",
    "group_advantages",
    "prune_negatives",
    "spa_rewards",
    "surrogate_loss_and_grad",
    "train_iteration",
]
