"""Length-shaped rewards, group-relative advantages and the clipped surrogate.

Each environment action is one "token": the importance ratio of a step is
``exp(log pi_theta(a|s) - behavior_logprob)`` and the KL penalty is evaluated
exactly over the step's candidate set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import kernels
from ..domain import Trajectory
from ..policy import NonFiniteValue, PolicyParams

DEGENERATE_STD = 1e-8


def spa_rewards(group: Sequence[Trajectory], alpha: float) -> list[float]:
    """Shortest-path adjusted rewards: ``1 - alpha * (T - T_min) / T`` for
    successes, where ``T_min`` is the shortest success in this group; 0 for
    failures."""
    if not group:
        raise ValueError("empty group")
    succ = [t.length for t in group if t.success]
    if not succ:
        return [0.0] * len(group)
    t_min = min(succ)
    return [(1.0 - alpha * (t.length - t_min) / t.length) if t.success else 0.0 for t in group]


def group_advantages(rewards: Sequence[float]) -> tuple[np.ndarray, bool]:
    """Standardize with the population std; degenerate groups get zeros."""
    r = np.asarray(rewards, dtype=np.float64)
    if r.size < 2:
        raise ValueError("need at least two rewards")
    mu = r.mean()
    sigma = math.sqrt(float(np.mean((r - mu) ** 2)))
    if sigma < DEGENERATE_STD:
        return np.zeros_like(r), True
    return (r - mu) / sigma, False


@dataclass
class LossStats:
    loss: float = 0.0
    policy_loss: float = 0.0
    kl_loss: float = 0.0
    mean_ratio: float = 1.0
    clip_frac: float = 0.0
    mean_kl: float = 0.0
    mean_entropy: float = 0.0
    grad_norm: float = 0.0
    steps: int = 0


@dataclass
class _Packed:
    feats: np.ndarray  # (rows, k)
    offsets: np.ndarray  # (steps + 1,)
    chosen: np.ndarray  # (steps,) row index of the taken action
    behavior: np.ndarray  # (steps,)
    step_adv: np.ndarray  # (steps,)
    step_weight: np.ndarray  # (steps,) 1 / (G' * T_i)
    total_steps: int


def _pack(batch: Sequence[tuple[Trajectory, float]]) -> _Packed:
    feats, chosen, behavior, adv, weight = [], [], [], [], []
    offsets = [0]
    n_traj = len(batch)
    for traj, a in batch:
        w = 1.0 / (n_traj * traj.length)
        for step in traj.steps:
            if step.features is None:
                raise ValueError("steps must carry cached candidate features")
            chosen.append(offsets[-1] + step.action_index)
            feats.append(step.features)
            offsets.append(offsets[-1] + step.features.shape[0])
            behavior.append(step.behavior_logprob)
            adv.append(a)
            weight.append(w)
    return _Packed(
        feats=np.ascontiguousarray(np.concatenate(feats, axis=0), dtype=np.int64),
        offsets=np.asarray(offsets, dtype=np.int64),
        chosen=np.asarray(chosen, dtype=np.int64),
        behavior=np.asarray(behavior, dtype=np.float64),
        step_adv=np.asarray(adv, dtype=np.float64),
        step_weight=np.asarray(weight, dtype=np.float64),
        total_steps=len(chosen),
    )


def surrogate_loss_and_grad(
    batch: Sequence[tuple[Trajectory, float]],
    params: PolicyParams,
    ref_params: PolicyParams,
    clip_epsilon: float = 0.2,
    kl_beta: float = 0.001,
    temperature: float = 1.0,
    grad_clip_norm: float = 1.0,
) -> tuple[float, np.ndarray, LossStats]:
    """Clipped surrogate plus exact KL to the reference policy.

    ``loss = -(1/G') sum_i (1/T_i) sum_t min(rho A, clip(rho) A)
    + beta * mean_{i,t} KL(pi_theta || pi_ref)``. The returned gradient is
    norm-clipped to ``grad_clip_norm``; ``stats.grad_norm`` is the norm
    before clipping.
    """
    if params.dim != ref_params.dim:
        raise ValueError("policy and reference dimensions differ")
    grad = np.zeros(params.dim)
    if not batch:
        return 0.0, grad, LossStats()
    pk = _pack(batch)
    scale = 1.0 / temperature
    sizes = np.diff(pk.offsets)
    starts = pk.offsets[:-1]

    logp = kernels.segment_log_softmax(kernels.row_logits(params.weights, pk.feats, scale), pk.offsets)
    logq = kernels.segment_log_softmax(kernels.row_logits(ref_params.weights, pk.feats, scale), pk.offsets)
    p = np.exp(logp)

    # policy term
    ratio = np.exp(logp[pk.chosen] - pk.behavior)
    unclipped = ratio * pk.step_adv
    clipped = np.clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon) * pk.step_adv
    term = np.minimum(unclipped, clipped)
    gate = unclipped <= clipped
    policy_loss = -float(np.sum(pk.step_weight * term))
    # d loss / d logp(chosen)
    g_chosen = -pk.step_weight * pk.step_adv * ratio * gate

    # KL term, averaged per step over the batch
    plogratio = p * (logp - logq)
    kl_steps = np.add.reduceat(plogratio, starts)
    kl_coef = kl_beta / pk.total_steps
    kl_loss = kl_coef * float(np.sum(kl_steps))

    # row coefficients w.r.t. logits z (d z / d w = features / temperature)
    g_rows = np.repeat(g_chosen, sizes)
    coef = -g_rows * p
    coef[pk.chosen] += g_chosen
    coef += kl_coef * (plogratio - p * np.repeat(kl_steps, sizes))
    coef *= scale
    kernels.scatter_rows(grad, pk.feats, np.ascontiguousarray(coef))

    loss = policy_loss + kl_loss
    norm = float(np.linalg.norm(grad))
    if not (math.isfinite(loss) and math.isfinite(norm)):
        raise NonFiniteValue("non-finite loss or gradient")
    if norm > grad_clip_norm:
        grad *= grad_clip_norm / norm

    ent = -np.add.reduceat(p * logp, starts)
    stats = LossStats(
        loss=loss,
        policy_loss=policy_loss,
        kl_loss=kl_loss,
        mean_ratio=float(np.mean(ratio)),
        clip_frac=float(np.mean(~gate)),
        mean_kl=float(np.mean(kl_steps)),
        mean_entropy=float(np.mean(ent)),
        grad_norm=norm,
        steps=pk.total_steps,
    )
    return loss, grad, stats


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, dim: int) -> "AdamState":
        return cls(np.zeros(dim), np.zeros(dim), 0)

    def copy(self) -> "AdamState":
        return AdamState(self.m.copy(), self.v.copy(), self.t)


def adam_step(
    params: PolicyParams,
    grad: np.ndarray,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[PolicyParams, AdamState]:
    """One bias-corrected Adam step. Returns new objects; inputs are untouched."""
    t = state.t + 1
    m = beta1 * state.m + (1.0 - beta1) * grad
    v = beta2 * state.v + (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    weights = params.weights - lr * m_hat / (np.sqrt(v_hat) + eps)
    if not np.all(np.isfinite(weights)):
        raise NonFiniteValue("optimizer produced non-finite weights")
    return PolicyParams(weights, params.version + 1, params.k), AdamState(m, v, t)
