"""Positive replay buffer and negative-rollout pruning."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..domain import Trajectory


@dataclass
class BufferEntry:
    trajectory: Trajectory
    stored_advantage: float
    reuse_count: int = 0
    serial: int = 0  # insertion order, for deterministic tie-breaks


@dataclass
class ReplayBuffer:
    capacity: int = 256
    entries: list = dataclasses.field(default_factory=list)
    _serial: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    def copy(self) -> "ReplayBuffer":
        return ReplayBuffer(
            self.capacity,
            [dataclasses.replace(e) for e in self.entries],
            self._serial,
        )

    def check(self, reuse_cap: int) -> None:
        """Raise AssertionError if a buffer invariant is broken."""
        assert len(self.entries) <= self.capacity, "buffer over capacity"
        for e in self.entries:
            assert e.trajectory.terminal_reward == 1, "non-success stored"
            assert e.stored_advantage > 0, "non-positive stored advantage"
            assert 0 <= e.reuse_count <= reuse_cap, "reuse cap exceeded"


def buffer_insert(
    buffer: ReplayBuffer, scored: Iterable[tuple[Trajectory, float]], kappa: float
) -> int:
    """Insert the top ``ceil(kappa * |eligible|)`` successful positive-advantage
    trajectories; on overflow evict the lowest stored advantages. Returns the
    number inserted."""
    eligible = [(t, float(a)) for t, a in scored if t.success and a > 0]
    if not eligible or buffer.capacity == 0:
        return 0
    n = math.ceil(kappa * len(eligible))
    # stable sort: equal advantages keep rollout order
    top = sorted(eligible, key=lambda ta: -ta[1])[:n]
    for traj, adv in top:
        buffer._serial += 1
        buffer.entries.append(BufferEntry(traj, adv, 0, buffer._serial))
    if len(buffer.entries) > buffer.capacity:
        buffer.entries.sort(key=lambda e: (-e.stored_advantage, e.serial))
        del buffer.entries[buffer.capacity :]
    return n


def buffer_draw(
    buffer: ReplayBuffer,
    fresh_count: int,
    replay_fraction: float,
    replay_gamma: float,
    reuse_cap: int,
) -> list[tuple[Trajectory, float]]:
    """Draw up to ``min(floor(f * M), floor(gamma * M))`` highest-advantage
    entries below the reuse cap. Returns (replayed trajectory, stored advantage)."""
    target = min(math.floor(replay_fraction * fresh_count), math.floor(replay_gamma * fresh_count))
    if target <= 0:
        return []
    ranked = sorted(
        (e for e in buffer.entries if e.reuse_count < reuse_cap),
        key=lambda e: (-e.stored_advantage, e.serial),
    )
    out = []
    for e in ranked[:target]:
        e.reuse_count += 1
        replayed = dataclasses.replace(e.trajectory, origin="replayed", replay_count=e.reuse_count)
        out.append((replayed, e.stored_advantage))
    return out


def prune_negatives(
    batch: Sequence[tuple[Trajectory, float]], rng: np.random.Generator
) -> tuple[list[tuple[Trajectory, float]], int]:
    """Cap failures at twice the successes by dropping the lowest-advantage
    failures (random tie-break). Returns (retained batch, number dropped)."""
    pos = sum(1 for t, _ in batch if t.success)
    neg_idx = [i for i, (t, _) in enumerate(batch) if not t.success]
    excess = len(neg_idx) - 2 * pos
    if excess <= 0:
        return list(batch), 0
    tiebreak = rng.random(len(neg_idx))
    order = sorted(range(len(neg_idx)), key=lambda j: (batch[neg_idx[j]][1], tiebreak[j]))
    drop = {neg_idx[j] for j in order[:excess]}
    return [item for i, item in enumerate(batch) if i not in drop], excess
