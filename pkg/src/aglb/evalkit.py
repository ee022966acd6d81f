"""Evaluation protocols: pass@k by tier and step-efficiency comparisons.

pass@k is first-k in seed order: a task counts as solved at k when any of
its first k trials succeeded. Trial ``j`` of a task always uses
``derive_seed(seed, task_id, j)``, so two policies evaluated with the same
seed see the same per-episode random streams.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .domain import TIERS
from .env import Suite
from .policy import PolicyParams
from .runtime import RolloutJob, RolloutRuntime, derive_seed

PASS_KS = (1, 2, 4, 8)
OVERALL = "overall"


@dataclass(frozen=True)
class Trial:
    success: bool
    steps: int


@dataclass
class TaskResult:
    task_id: str
    tier: str
    trials: list[Trial]


@dataclass
class EvalReport:
    trials: int
    temperature: float
    seed: int
    tasks: list[TaskResult]
    pass_at_k: dict = field(default_factory=dict)  # tier -> {k: rate}
    mean_success_steps: dict = field(default_factory=dict)  # tier -> float | None

    def success_rate(self) -> float:
        """Fraction of all trials, over every task, that succeeded."""
        flat = [r.success for t in self.tasks for r in t.trials]
        return float(np.mean(flat)) if flat else 0.0

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "temperature": self.temperature,
            "seed": self.seed,
            "tasks": [
                {
                    "task_id": t.task_id,
                    "tier": t.tier,
                    "trials": [{"success": r.success, "steps": r.steps} for r in t.trials],
                }
                for t in self.tasks
            ],
            "aggregates": {
                "pass_at_k": {tier: {str(k): v for k, v in d.items()} for tier, d in self.pass_at_k.items()},
                "mean_success_steps": dict(self.mean_success_steps),
            },
        }

    @classmethod
    def from_json(cls, d: dict) -> "EvalReport":
        tasks = [
            TaskResult(t["task_id"], t["tier"], [Trial(bool(r["success"]), int(r["steps"])) for r in t["trials"]])
            for t in d["tasks"]
        ]
        report = cls(int(d["trials"]), float(d["temperature"]), int(d["seed"]), tasks)
        validate_report(report.to_json() | {"aggregates": d["aggregates"]})
        report.pass_at_k = {
            tier: {int(k): float(v) for k, v in ks.items()} for tier, ks in d["aggregates"]["pass_at_k"].items()
        }
        report.mean_success_steps = dict(d["aggregates"]["mean_success_steps"])
        return report


def pass_at_k(mask: Sequence[bool], k: int) -> bool:
    """True when any of the first ``k`` trials succeeded."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return any(mask[:k])


def _ks(trials: int) -> list[int]:
    ks = [k for k in PASS_KS if k <= trials]
    return ks if trials in ks else ks + [trials]


def aggregate(tasks: Sequence[TaskResult], trials: int) -> tuple[dict, dict]:
    by_tier: dict[str, list[TaskResult]] = {}
    for t in tasks:
        by_tier.setdefault(t.tier, []).append(t)
    order = [tier for tier in TIERS if tier in by_tier]
    buckets = {tier: by_tier[tier] for tier in order}
    buckets[OVERALL] = list(tasks)
    passk, steps = {}, {}
    for tier, group in buckets.items():
        masks = [[r.success for r in t.trials] for t in group]
        passk[tier] = {k: (float(np.mean([pass_at_k(m, k) for m in masks])) if masks else 0.0) for k in _ks(trials)}
        lens = [r.steps for t in group for r in t.trials if r.success]
        steps[tier] = float(np.mean(lens)) if lens else None
    return passk, steps


def _run(
    policy: PolicyParams,
    suite: Suite,
    task_ids: Sequence[str],
    trials: int,
    temperature: float,
    seed: int,
    horizon: int,
    workers: int,
    backend: str,
):
    greedy = temperature == 0.0
    jobs = [RolloutJob(tid, j, derive_seed(seed, tid, j)) for tid in task_ids for j in range(trials)]
    with RolloutRuntime(suite, workers, backend) as rt:
        flat = rt.run_jobs(jobs, policy.snapshot(), horizon, 1.0 if greedy else temperature, greedy)
    return [flat[i * trials : (i + 1) * trials] for i in range(len(task_ids))]


def evaluate(
    policy: PolicyParams,
    suite: Suite,
    trials: int = 8,
    temperature: float = 1.0,
    seed: int = 0,
    horizon: int = 50,
    workers: int = 1,
    backend: str = "process",
) -> EvalReport:
    """Run ``trials`` seeded episodes per task. ``temperature=0`` means
    argmax decoding (first index on ties)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    refs = suite.refs
    groups = _run(policy, suite, [r.task_id for r in refs], trials, temperature, seed, horizon, workers, backend)
    tasks = [
        TaskResult(ref.task_id, ref.tier, [Trial(t.success, t.length) for t in trajs])
        for ref, trajs in zip(refs, groups)
    ]
    passk, steps = aggregate(tasks, trials)
    return EvalReport(trials, temperature, seed, tasks, passk, steps)


# -- pairwise comparison ----------------------------------------------------

CATEGORIES = ("BC", "BW", "Others")


@dataclass(frozen=True)
class PairOutcome:
    task_id: str
    tier: str
    category: str  # BC, BW or Others
    result: Optional[str]  # win / tie / loss for A, BC only
    steps_a: int
    steps_b: int


def _tally(outcomes: Sequence[PairOutcome]) -> dict:
    out = {c: 0 for c in CATEGORIES} | {"win": 0, "tie": 0, "loss": 0, "tasks": len(outcomes)}
    for o in outcomes:
        out[o.category] += 1
        if o.result is not None:
            out[o.result] += 1
    bc = out["BC"]
    out["win_rate"] = out["win"] / bc if bc else None
    return out


@dataclass
class CompareReport:
    outcomes: list[PairOutcome]
    per_tier: dict
    overall: dict

    def to_json(self) -> dict:
        return {
            "tasks": [o.__dict__ for o in self.outcomes],
            "per_tier": self.per_tier,
            "overall": self.overall,
        }


def classify(success_a: bool, steps_a: int, success_b: bool, steps_b: int) -> tuple[str, Optional[str]]:
    if success_a and success_b:
        if steps_a < steps_b:
            return "BC", "win"
        if steps_a > steps_b:
            return "BC", "loss"
        return "BC", "tie"
    if not success_a and not success_b:
        return "BW", None
    return "Others", None


def compare_spa(
    policy_a: PolicyParams,
    policy_b: PolicyParams,
    suite: Suite,
    seed: int = 0,
    horizon: int = 50,
    workers: int = 1,
    backend: str = "process",
) -> CompareReport:
    """Greedy episode per task for each policy; A wins a both-correct task
    when it needs strictly fewer steps."""
    refs = suite.refs
    ids = [r.task_id for r in refs]
    ga = _run(policy_a, suite, ids, 1, 0.0, seed, horizon, workers, backend)
    gb = _run(policy_b, suite, ids, 1, 0.0, seed, horizon, workers, backend)
    outcomes = []
    for ref, (ta,), (tb,) in zip(refs, ga, gb):
        cat, res = classify(ta.success, ta.length, tb.success, tb.length)
        outcomes.append(PairOutcome(ref.task_id, ref.tier, cat, res, ta.length, tb.length))
    tiers = [t for t in TIERS if any(o.tier == t for o in outcomes)]
    per_tier = {t: _tally([o for o in outcomes if o.tier == t]) for t in tiers}
    return CompareReport(outcomes, per_tier, _tally(outcomes))


def paired_success_steps(a: EvalReport, b: EvalReport) -> tuple[Optional[float], Optional[float], int]:
    """Mean successful-episode length of each report over the tasks that both
    solve at least once. Returns ``(mean_a, mean_b, n_tasks)``."""
    tb = {t.task_id: t for t in b.tasks}
    la, lb, n = [], [], 0
    for t in a.tasks:
        other = tb.get(t.task_id)
        if other is None:
            continue
        sa = [r.steps for r in t.trials if r.success]
        sb = [r.steps for r in other.trials if r.success]
        if sa and sb:
            la.append(np.mean(sa))
            lb.append(np.mean(sb))
            n += 1
    if not n:
        return None, None, 0
    return float(np.mean(la)), float(np.mean(lb)), n


# -- report files -----------------------------------------------------------


class ReportError(ValueError):
    pass


def validate_report(d: dict) -> None:
    """Structural check of an EvalReport JSON object."""
    try:
        n = int(d["trials"])
        for t in d["tasks"]:
            if t["tier"] not in TIERS:
                raise ReportError(f"unknown tier {t['tier']!r}")
            if len(t["trials"]) != n:
                raise ReportError(f"task {t['task_id']}: {len(t['trials'])} trials, expected {n}")
            for r in t["trials"]:
                if not isinstance(r["success"], bool) or int(r["steps"]) < 1:
                    raise ReportError(f"task {t['task_id']}: bad trial {r}")
        for tier, ks in d["aggregates"]["pass_at_k"].items():
            vals = [ks[k] for k in sorted(ks, key=int)]
            if any(not 0.0 <= v <= 1.0 for v in vals):
                raise ReportError(f"pass@k out of range for {tier}")
            if any(x > y + 1e-12 for x, y in zip(vals, vals[1:])):
                raise ReportError(f"pass@k decreasing in k for {tier}")
        d["aggregates"]["mean_success_steps"]
    except (KeyError, TypeError) as exc:
        raise ReportError(f"malformed report: {exc}") from None


def write_report(report, path) -> None:
    Path(path).write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")


def load_report(path) -> EvalReport:
    return EvalReport.from_json(json.loads(Path(path).read_text()))
