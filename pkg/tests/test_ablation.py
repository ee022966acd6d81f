from aglb.ablation import AblationConfig, run_seed

TINY = AblationConfig(
    counts={"trivial": 4, "easy": 4, "unsolvable": 2},
    warmup_counts={"trivial": 4, "easy": 4},
    iterations=4,
    warmup_iterations=2,
    group_size=4,
    tasks_per_iteration=4,
    epoch_length=1,
    eval_trials=2,
)


def test_run_seed_is_deterministic_and_complete():
    a = run_seed(0, TINY)
    b = run_seed(0, TINY)
    assert set(a.variants) == {"full", "nospa", "plain"}
    assert a.line() == b.line()
    for v in a.variants.values():
        assert 0.0 <= v.success_rate <= 1.0
        assert v.unsolvable_rollouts % TINY.group_size == 0
        assert len(v.report.tasks) == 10
    assert isinstance(a.full_beats_plain, bool)
    assert a.fcf_saves_budget == (2 * a.variants["full"].unsolvable_rollouts <= a.variants["plain"].unsolvable_rollouts)


def test_spa_verdict_needs_paired_tasks():
    out = run_seed(1, TINY)
    out.paired_tasks, out.steps_full, out.steps_nospa = 0, None, None
    assert out.spa_shorter is False
    assert "n/a" in out.line()
    out.paired_tasks, out.steps_full, out.steps_nospa = 3, 4.0, 5.0
    assert out.spa_shorter is True
