import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aglb.adagrpo import (
    AdamState,
    NonFiniteValue,
    adam_step,
    group_advantages,
    spa_rewards,
    surrogate_loss_and_grad,
)
from aglb.domain import ActionCommand, Step, Trajectory
from aglb.policy import PolicyParams, distribution_from_features
from factories import OBS, TASK, lengths_trajectory, make_trajectory


def _group(lengths_success):
    return [lengths_trajectory(n, s) for n, s in lengths_success]


def test_spa_worked_example():
    group = _group([(5, True), (10, True), (7, False), (3, False)])
    rewards = spa_rewards(group, 1.0)
    assert rewards == [1.0, 0.5, 0.0, 0.0]
    adv, degenerate = group_advantages(rewards)
    assert not degenerate
    assert np.allclose(adv, [1.5076, 0.3015, -0.9045, -0.9045], atol=1e-3)


def test_spa_edge_cases():
    assert spa_rewards(_group([(4, False), (9, False)]), 1.0) == [0.0, 0.0]
    assert spa_rewards(_group([(3, True), (12, True)]), 0.0) == [1.0, 1.0]
    assert spa_rewards(_group([(6, True), (6, True)]), 1.0) == [1.0, 1.0]
    with pytest.raises(ValueError):
        spa_rewards([], 1.0)


@settings(max_examples=300, deadline=None)
@given(
    st.lists(st.tuples(st.integers(1, 50), st.booleans()), min_size=2, max_size=16),
    st.floats(0.0, 1.0),
)
def test_spa_monotone_and_bounded(members, alpha):
    group = _group(members)
    rewards = spa_rewards(group, alpha)
    succ = [(t.length, r) for t, r in zip(group, rewards) if t.success]
    for t, r in zip(group, rewards):
        if not t.success:
            assert r == 0.0
        else:
            assert 1.0 - alpha - 1e-12 <= r <= 1.0
    for la, ra in succ:
        for lb, rb in succ:
            if la < lb:
                assert ra >= rb
            if la == min(l for l, _ in succ):
                assert ra == 1.0


def test_advantages_degenerate_and_population_std():
    adv, degenerate = group_advantages([0.7, 0.7, 0.7])
    assert degenerate and not adv.any()
    adv, _ = group_advantages([1.0, 0.0])
    assert np.allclose(adv, [1.0, -1.0])
    with pytest.raises(ValueError):
        group_advantages([1.0])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=32))
def test_advantages_standardized(rewards):
    adv, degenerate = group_advantages(rewards)
    if not degenerate:
        assert abs(adv.mean()) < 1e-9
        assert abs(np.mean(adv**2) - 1.0) < 1e-6


def _single_step(params: PolicyParams, ratio: float) -> Trajectory:
    cands = (ActionCommand("Back"), ActionCommand("Finish"))
    feats = np.array([[1, 2], [3, 4]], dtype=np.int64)
    _, logp = distribution_from_features(params.weights, feats)
    behavior = float(logp[1]) - math.log(ratio)
    step = Step(OBS, cands[1], cands, behavior, logp, 1, feats)
    return Trajectory(TASK, (step,), 1)


@pytest.mark.parametrize("ratio,adv,expected", [(1.5, 1.0, 1.2), (0.5, -1.0, -0.8), (1.1, 1.0, 1.1), (0.5, 1.0, 0.5)])
def test_clip_arithmetic(ratio, adv, expected):
    params = PolicyParams.zeros(8, 2)
    traj = _single_step(params, ratio)
    loss, _, stats = surrogate_loss_and_grad([(traj, adv)], params, params, 0.2, 0.0)
    assert abs(-loss - expected) < 1e-12
    assert stats.clip_frac == (1.0 if abs(expected) != abs(ratio * adv) else 0.0)


def test_on_policy_loss_is_zero():
    rng = np.random.default_rng(5)
    params = PolicyParams(rng.normal(size=64), 0, 4)
    group = [make_trajectory(rng, int(rng.integers(1, 6)), bool(rng.integers(0, 2)), behavior=params) for _ in range(6)]
    group[0] = make_trajectory(rng, 3, True, behavior=params)
    group[1] = make_trajectory(rng, 2, False, behavior=params)
    adv, _ = group_advantages(spa_rewards(group, 1.0))
    loss, _, stats = surrogate_loss_and_grad(list(zip(group, adv)), params, params, 0.2, 0.0)
    assert abs(loss) < 1e-9
    assert abs(stats.mean_ratio - 1.0) < 1e-12
    assert stats.mean_kl == 0.0


def _fd_instance(seed: int, temperature: float = 1.0):
    rng = np.random.default_rng(seed)
    params = PolicyParams(rng.normal(scale=0.5, size=64), 0, 4)
    ref = PolicyParams(rng.normal(scale=0.5, size=64), 0, 4)
    behavior = PolicyParams(params.weights + rng.normal(scale=0.3, size=64), 0, 4)
    batch = [
        (make_trajectory(rng, int(rng.integers(1, 6)), bool(rng.integers(0, 2)), behavior=behavior, temperature=temperature), float(rng.normal()))
        for _ in range(3)
    ]
    return params, ref, batch


def _max_rel_error(params, ref, batch, beta=0.001, temperature=1.0, h=1e-5):
    _, grad, _ = surrogate_loss_and_grad(batch, params, ref, 0.2, beta, temperature, math.inf)
    fd = np.zeros_like(grad)
    for i in range(params.dim):
        plus, minus = params.weights.copy(), params.weights.copy()
        plus[i] += h
        minus[i] -= h
        lp, _, _ = surrogate_loss_and_grad(batch, PolicyParams(plus, 0, 4), ref, 0.2, beta, temperature, math.inf)
        lm, _, _ = surrogate_loss_and_grad(batch, PolicyParams(minus, 0, 4), ref, 0.2, beta, temperature, math.inf)
        fd[i] = (lp - lm) / (2 * h)
    denom = np.maximum(np.maximum(np.abs(grad), np.abs(fd)), 1e-6)
    return float(np.max(np.abs(grad - fd) / denom))


def test_gradient_matches_finite_differences():
    for seed in range(20):
        params, ref, batch = _fd_instance(seed)
        assert _max_rel_error(params, ref, batch) < 1e-4, seed


def test_gradient_with_temperature_and_strong_kl():
    params, ref, batch = _fd_instance(123, temperature=0.7)
    assert _max_rel_error(params, ref, batch, beta=0.5, temperature=0.7) < 1e-4


def test_gradient_clipping_and_stats():
    params, ref, batch = _fd_instance(3)
    _, raw, stats = surrogate_loss_and_grad(batch, params, ref, 0.2, 0.001, 1.0, math.inf)
    _, clipped, stats2 = surrogate_loss_and_grad(batch, params, ref, 0.2, 0.001, 1.0, 1e-3)
    assert stats.grad_norm == pytest.approx(np.linalg.norm(raw))
    assert stats2.grad_norm == pytest.approx(stats.grad_norm)
    assert np.linalg.norm(clipped) == pytest.approx(1e-3)
    assert np.allclose(clipped / np.linalg.norm(clipped), raw / np.linalg.norm(raw))
    assert stats.steps == sum(t.length for t, _ in batch)


def test_empty_batch_and_dimension_mismatch():
    params = PolicyParams.zeros(64, 4)
    loss, grad, stats = surrogate_loss_and_grad([], params, params)
    assert loss == 0.0 and not grad.any() and stats.steps == 0
    with pytest.raises(ValueError):
        surrogate_loss_and_grad([], params, PolicyParams.zeros(32, 4))


def test_adam_first_step_is_signed_learning_rate():
    params = PolicyParams(np.zeros(4), 0, 2)
    grad = np.array([0.3, -2.0, 0.0, 1e-3])
    new, state = adam_step(params, grad, AdamState.zeros(4), lr=0.1)
    assert np.allclose(new.weights, [-0.1, 0.1, 0.0, -0.1], atol=1e-5)
    assert state.t == 1 and new.version == 1
    assert not params.weights.any()


def test_adam_rejects_non_finite():
    params = PolicyParams(np.zeros(2), 0, 2)
    with pytest.raises(NonFiniteValue):
        adam_step(params, np.array([np.nan, 0.0]), AdamState.zeros(2), lr=0.1)
