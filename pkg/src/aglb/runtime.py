"""Deterministic parallel rollouts.

Every episode draws from its own counter-based generator (Philox) keyed by
``derive_seed(global_seed, task_id, rollout_index)``, and results are
collected in (task order, rollout index) order, so the output does not depend
on the number of workers or on scheduling.

``derive_seed`` is ``sm(sm(global_seed ^ fnv1a64(task_id)) ^ rollout_index)``
where ``sm`` is the splitmix64 finalizer and all arithmetic is modulo 2**64.
"""

from __future__ import annotations

import multiprocessing as mp
import os
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .domain import Step, TaskRef, Trajectory
from .env import Suite, TaskEnv
from .kernels import fnv1a64
from .policy import PolicyParams, distribution_from_features, featurize_all, sample_index

MASK64 = (1 << 64) - 1
MAX_WORKERS = 256


def splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(global_seed: int, task_id: str, rollout_index: int) -> int:
    h = fnv1a64(task_id.encode())
    return splitmix64(splitmix64((global_seed & MASK64) ^ h) ^ (rollout_index & MASK64))


def default_workers() -> int:
    env = os.environ.get("AGLB_WORKERS")
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("AGLB_WORKERS must be >= 1")
        return min(n, MAX_WORKERS)
    return min(os.cpu_count() or 1, MAX_WORKERS)


@dataclass(frozen=True)
class RolloutJob:
    task_id: str
    rollout_index: int
    episode_seed: int


def _features(env: TaskEnv, state, cands, dim: int, k: int):
    key = (dim, k, state.key)
    feats = env.feature_cache.get(key)
    if feats is None:
        feats = featurize_all(env.observe(state), cands, env.task.instruction, dim, k)
        feats.setflags(write=False)
        env.feature_cache[key] = feats
    return feats


def run_episode(
    env: TaskEnv,
    weights: np.ndarray,
    k: int,
    episode_seed: int,
    temperature: float = 1.0,
    greedy: bool = False,
) -> Trajectory:
    rng = np.random.Generator(np.random.Philox(key=episode_seed))
    dim = weights.shape[0]
    state = env.reset(episode_seed)
    steps: list[Step] = []
    while True:
        obs = env.observe(state)
        cands = env.candidates(state)
        feats = _features(env, state, cands, dim, k)
        probs, logp = distribution_from_features(weights, feats, temperature)
        if greedy:
            idx = int(np.argmax(probs))
        else:
            idx = sample_index(probs, float(rng.random()))
        action = cands[idx]
        res = env.step(state, action)
        steps.append(
            Step(
                observation=obs,
                action=action,
                candidates=cands,
                behavior_logprob=float(logp[idx]),
                candidate_behavior_logprobs=logp,
                action_index=idx,
                features=feats,
            )
        )
        state = res.state
        if res.done:
            return Trajectory(env.task, tuple(steps), res.reward, res.truncated)


# -- worker plumbing --------------------------------------------------------

_WORKER_SUITE: Optional[Suite] = None


def _init_worker(suite: Suite) -> None:
    global _WORKER_SUITE
    _WORKER_SUITE = suite


def _run_chunk(suite: Optional[Suite], jobs, weights, k, horizon, temperature, greedy):
    suite = suite if suite is not None else _WORKER_SUITE
    out = []
    for job in jobs:
        env = suite.env(job.task_id, horizon)
        out.append(run_episode(env, weights, k, job.episode_seed, temperature, greedy))
    return out


def _chunks(seq: list, n: int) -> list[list]:
    size, rem = divmod(len(seq), n)
    out, start = [], 0
    for i in range(n):
        end = start + size + (1 if i < rem else 0)
        if end > start:
            out.append(seq[start:end])
        start = end
    return out


class RolloutRuntime:
    """Worker pool bound to one suite.

    ``backend="thread"`` shares environment caches between workers;
    ``backend="process"`` forks worker processes that each hold a copy of the
    suite. ``workers=1`` runs inline.
    """

    def __init__(self, suite: Suite, workers: Optional[int] = None, backend: str = "process"):
        self.suite = suite
        self.workers = default_workers() if workers is None else workers
        if not 1 <= self.workers <= MAX_WORKERS:
            raise ValueError(f"workers must lie in [1, {MAX_WORKERS}]")
        if backend not in ("thread", "process"):
            raise ValueError(f"unknown backend {backend!r}")
        self.backend = backend
        self._pool: Optional[Executor] = None

    def __enter__(self) -> "RolloutRuntime":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def _executor(self) -> Executor:
        if self._pool is None:
            if self.backend == "thread":
                self._pool = ThreadPoolExecutor(self.workers)
            else:
                ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else None
                self._pool = ProcessPoolExecutor(
                    self.workers, mp_context=ctx, initializer=_init_worker, initargs=(self.suite,)
                )
        return self._pool

    def run_jobs(
        self,
        jobs: Sequence[RolloutJob],
        snapshot: PolicyParams,
        horizon: int = 50,
        temperature: float = 1.0,
        greedy: bool = False,
    ) -> list[Trajectory]:
        jobs = list(jobs)
        weights = snapshot.weights
        if self.workers == 1 or len(jobs) <= 1:
            return _run_chunk(self.suite, jobs, weights, snapshot.k, horizon, temperature, greedy)
        pool = self._executor()
        shared = self.suite if self.backend == "thread" else None
        futures = [
            pool.submit(_run_chunk, shared, chunk, weights, snapshot.k, horizon, temperature, greedy)
            for chunk in _chunks(jobs, self.workers)
        ]
        out: list[Trajectory] = []
        for fut in futures:  # canonical order, whatever finished first
            out.extend(fut.result())
        return out

    def run_groups(
        self,
        task_ids: Sequence[str],
        snapshot: PolicyParams,
        group_size: int,
        global_seed: int,
        horizon: int = 50,
        temperature: float = 1.0,
    ) -> list[list[Trajectory]]:
        jobs = [
            RolloutJob(tid, r, derive_seed(global_seed, tid, r)) for tid in task_ids for r in range(group_size)
        ]
        flat = self.run_jobs(jobs, snapshot, horizon, temperature)
        return [flat[i * group_size : (i + 1) * group_size] for i in range(len(task_ids))]


def run_rollouts(
    tasks: Sequence[TaskRef],
    suite: Suite,
    policy_snapshot: PolicyParams,
    group_size: int,
    workers: int = 1,
    global_seed: int = 0,
    horizon: int = 50,
    temperature: float = 1.0,
    backend: str = "process",
) -> list[list[Trajectory]]:
    """G trajectories per task, ordered by (task order, rollout index)."""
    with RolloutRuntime(suite, workers, backend) as rt:
        return rt.run_groups([t.task_id for t in tasks], policy_snapshot, group_size, global_seed, horizon, temperature)
