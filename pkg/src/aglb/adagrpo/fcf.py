"""Failure curriculum filtering.

A task whose rollouts score all zeros in two consecutive epochs enters a
three-epoch cooldown with sampling weight ``exp(-f)`` (``f`` = consecutive
failure epochs). Cooldown is measured in epochs, sampled or not; a success
while cooling down reactivates the task, otherwise it is removed for good.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

TRIGGER_EPOCHS = 2
COOLDOWN_EPOCHS = 3


class InsufficientTasks(ValueError):
    pass


class Phase(str, enum.Enum):
    ACTIVE = "active"
    COOLDOWN = "cooldown"
    REMOVED = "removed"


@dataclass(frozen=True)
class TaskStatus:
    failures: int = 0
    phase: Phase = Phase.ACTIVE
    cooldown_elapsed: int = 0

    @property
    def weight(self) -> float:
        if self.phase is Phase.REMOVED:
            return 0.0
        if self.phase is Phase.COOLDOWN:
            return math.exp(-self.failures)
        return 1.0


@dataclass(frozen=True)
class SchedulerState:
    tasks: Mapping[str, TaskStatus]

    @classmethod
    def fresh(cls, task_ids: Sequence[str]) -> "SchedulerState":
        return cls({tid: TaskStatus() for tid in task_ids})

    def weight(self, task_id: str) -> float:
        return self.tasks[task_id].weight

    def counts(self) -> dict[str, int]:
        out = {p.value: 0 for p in Phase}
        for st in self.tasks.values():
            out[st.phase.value] += 1
        return out


def _advance(st: TaskStatus, all_zero: bool | None) -> TaskStatus:
    """One epoch boundary for one task. ``all_zero`` is None when unsampled."""
    if st.phase is Phase.REMOVED:
        return st
    if all_zero is False:
        return TaskStatus()
    if st.phase is Phase.ACTIVE:
        if all_zero is None:
            return st
        f = st.failures + 1
        if f >= TRIGGER_EPOCHS:
            return TaskStatus(f, Phase.COOLDOWN, 0)
        return replace(st, failures=f)
    # cooling down: the clock runs whether or not the task was drawn
    elapsed = st.cooldown_elapsed + 1
    f = st.failures + 1
    if elapsed >= COOLDOWN_EPOCHS:
        return TaskStatus(f, Phase.REMOVED, elapsed)
    return TaskStatus(f, Phase.COOLDOWN, elapsed)


def fcf_update(state: SchedulerState, epoch_outcomes: Mapping[str, bool]) -> SchedulerState:
    """Apply one epoch's outcomes: ``{task_id: all rollouts scored zero}``."""
    unknown = set(epoch_outcomes) - set(state.tasks)
    if unknown:
        raise KeyError(f"outcomes for unknown tasks: {sorted(unknown)}")
    return SchedulerState({tid: _advance(st, epoch_outcomes.get(tid)) for tid, st in state.tasks.items()})


def fcf_sample_tasks(
    state: SchedulerState,
    task_ids: Sequence[str],
    n: int,
    rng: np.random.Generator,
    uniform: bool = False,
) -> list[str]:
    """Weighted sampling without replacement by sequential inverse-CDF draws.

    With ``uniform=True`` every task weighs 1 regardless of phase (the
    curriculum is switched off).
    """
    weights = np.array([1.0 if uniform else state.weight(t) for t in task_ids])
    if n > int(np.count_nonzero(weights)):
        raise InsufficientTasks(f"asked for {n} tasks, {int(np.count_nonzero(weights))} available")
    picked = []
    for _ in range(n):
        cdf = np.cumsum(weights)
        u = float(rng.random()) * cdf[-1]
        idx = int(np.searchsorted(cdf, u, side="right"))
        idx = min(idx, len(weights) - 1)
        while weights[idx] == 0.0:  # u landed on a boundary with float round-off
            idx -= 1
        picked.append(task_ids[idx])
        weights[idx] = 0.0
    return picked
