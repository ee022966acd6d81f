import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aglb.domain import ActionCommand, Observation
from aglb.env import SuiteConfig, generate_suite
from aglb.policy import (
    CheckpointError,
    EmptyCandidateSet,
    PolicyParams,
    SupportMismatch,
    action_distribution,
    distribution_from_features,
    entropy,
    featurize,
    featurize_all,
    greedy_action,
    kl_divergence,
    load_checkpoint,
    sample_action,
    sample_index,
    save_checkpoint,
)

OBS = Observation("TextView;;Inbox;[40,60][1040,180]\nButton;;Compose;[0,240][1080,510];clickable", "s", None, 0)
CANDS = (
    ActionCommand("Tap", element=(0, 240, 1080, 510)),
    ActionCommand("Back"),
    ActionCommand("Home"),
    ActionCommand("Finish"),
)


def test_uniform_and_single():
    p, lp = action_distribution(PolicyParams.zeros(), OBS, CANDS)
    assert np.allclose(p, 0.25)
    p, _ = action_distribution(PolicyParams.zeros(), OBS, CANDS[:1])
    assert p[0] == 1.0
    with pytest.raises(EmptyCandidateSet):
        action_distribution(PolicyParams.zeros(), OBS, ())


def test_two_candidate_softmax():
    w = np.zeros(8)
    w[1] = math.log(2.0)
    feats = np.array([[1], [0]])
    p, lp = distribution_from_features(w, feats)
    assert np.allclose(p, [2 / 3, 1 / 3], atol=1e-15)
    assert abs(np.exp(lp).sum() - 1.0) < 1e-12


def test_inverse_cdf():
    assert sample_index(np.full(4, 0.25), 0.30) == 1
    assert sample_index(np.full(4, 0.25), 0.0) == 0
    assert sample_index(np.full(4, 0.25), 0.9999) == 3
    point = np.array([0.0, 1.0, 0.0])
    assert all(sample_index(point, u) == 1 for u in (0.0, 0.5, 0.999))


def test_seeded_sampling_repeats():
    dist = (np.array([0.1, 0.2, 0.7]), np.log([0.1, 0.2, 0.7]))
    a = [sample_action(dist, np.random.default_rng(5))[0] for _ in range(3)]
    r1, r2 = np.random.default_rng(9), np.random.default_rng(9)
    assert [sample_action(dist, r1) for _ in range(20)] == [sample_action(dist, r2) for _ in range(20)]
    assert len(set(a)) == 1
    assert greedy_action((np.array([0.4, 0.4, 0.2]), np.zeros(3)))[0] == 0


def test_kl_and_entropy_values():
    assert kl_divergence([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert abs(kl_divergence([1.0, 0.0], [0.5, 0.5]) - math.log(2)) < 1e-15
    with pytest.raises(SupportMismatch):
        kl_divergence([0.5, 0.5], [1.0, 0.0])
    assert abs(entropy(np.full(4, 0.25)) - math.log(4)) < 1e-15
    assert entropy(np.array([0.0, 1.0])) == 0.0


_dist = st.lists(st.floats(0.01, 10.0), min_size=2, max_size=12)


@settings(max_examples=300, deadline=None)
@given(_dist, st.data())
def test_gibbs_and_entropy_bound(a, data):
    b = data.draw(st.lists(st.floats(0.01, 10.0), min_size=len(a), max_size=len(a)))
    p = np.array(a) / sum(a)
    q = np.array(b) / sum(b)
    assert kl_divergence(p, q) >= -1e-15
    assert entropy(p) <= math.log(len(p)) + 1e-12


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-20, 20), min_size=1, max_size=10), st.floats(-50, 50))
def test_shift_invariance(logits, c):
    n = len(logits)
    w = np.array(logits + [c])
    feats = np.arange(n).reshape(n, 1)
    shifted = np.column_stack([feats, np.full(n, n)])
    p1, _ = distribution_from_features(w, feats)
    p2, _ = distribution_from_features(w, shifted)
    assert np.allclose(p1, p2, atol=1e-12)
    assert abs(p1.sum() - 1.0) < 1e-12


def test_temperature_limits():
    w = np.array([0.0, 1.0, 3.0, 2.0])
    feats = np.arange(4).reshape(4, 1)
    p1, _ = distribution_from_features(w, feats, 1.0)
    ref = np.exp(w) / np.exp(w).sum()
    assert np.allclose(p1, ref, atol=1e-15)
    p0, _ = distribution_from_features(w, feats, 1e-3)
    assert np.max(np.abs(p0 - np.eye(4)[2])) < 1e-9


def _score_fn_analytic(w, feats, idx, temp):
    p, _ = distribution_from_features(w, feats, temp)
    g = np.zeros_like(w)
    np.add.at(g, feats[idx], 1.0)
    for r in range(feats.shape[0]):
        np.add.at(g, feats[r], -p[r])
    return g / temp


def test_score_function_matches_finite_differences():
    rng = np.random.default_rng(3)
    for _ in range(20):
        d, n, k = 64, int(rng.integers(2, 8)), 5
        w = rng.normal(size=d)
        feats = rng.integers(0, d, size=(n, k))
        idx = int(rng.integers(n))
        temp = float(rng.uniform(0.5, 2.0))
        g = _score_fn_analytic(w, feats, idx, temp)
        fd = np.zeros(d)
        h = 1e-5
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            fd[j] = (
                distribution_from_features(w + e, feats, temp)[1][idx]
                - distribution_from_features(w - e, feats, temp)[1][idx]
            ) / (2 * h)
        rel = np.max(np.abs(g - fd)) / max(1e-8, np.max(np.abs(fd)))
        assert rel < 1e-6


def test_featurize_shape_and_determinism():
    f = featurize_all(OBS, CANDS, 'Open "Compose"', 1 << 16, 32)
    assert f.shape == (4, 32) and f.dtype == np.int64
    assert np.all((0 <= f) & (f < 1 << 16))
    assert np.array_equal(f, featurize_all(OBS, CANDS, 'Open "Compose"', 1 << 16, 32))
    assert np.array_equal(f[1], featurize(OBS, CANDS[1], 'Open "Compose"'))


def test_collision_audit():
    suite = generate_suite(SuiteConfig(counts={"easy": 10, "medium": 10}), 4)
    rng = np.random.default_rng(0)
    total = distinct = 0
    while total < 10_000:
        ref = suite.refs[int(rng.integers(len(suite)))]
        env = suite.env(ref.task_id)
        s = env.reset()
        for _ in range(int(rng.integers(0, 6))):
            cands = env.candidates(s)
            r = env.step(s, cands[int(rng.integers(len(cands) - 1))])  # never Finish
            if r.done:
                break
            s = r.state
        cands = env.candidates(s)
        feats = featurize_all(env.observe(s), cands, ref.instruction)
        i, j = rng.choice(len(cands), size=2, replace=False)
        total += 1
        distinct += not np.array_equal(feats[i], feats[j])
    assert distinct / total >= 0.99


def test_checkpoint_round_trip(tmp_path):
    p = PolicyParams(np.random.default_rng(1).normal(size=128), 7, 16)
    path = tmp_path / "c.bin"
    save_checkpoint(p, path, seed=3, config_hash="abc")
    raw = path.read_bytes()
    assert raw[:4] == b"AGLB" and len(raw) == 16 + 8 * 128
    q = load_checkpoint(path)
    assert np.array_equal(q.weights, p.weights) and q.version == 7 and q.k == 16
    with pytest.raises(CheckpointError):
        load_checkpoint(path, expect_dim=64)
    path.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
    path.write_bytes(raw[:-8])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_params_reject_nonfinite():
    with pytest.raises(ValueError):
        PolicyParams(np.array([0.0, np.nan]))
    snap = PolicyParams.zeros(8).snapshot()
    with pytest.raises(ValueError):
        snap.weights[0] = 1.0
