import json
import subprocess
import sys
from pathlib import Path

import pytest

from aglb.cli import main

SMALL = {"counts": {"trivial": 4, "easy": 4, "medium": 2, "unsolvable": 2}}
TRAIN = {"group_size": 4, "tasks_per_iteration": 4, "iterations": 3, "dim": 4096, "k": 8}


@pytest.fixture()
def suite_path(tmp_path: Path) -> Path:
    cfg = tmp_path / "suite_cfg.json"
    cfg.write_text(json.dumps(SMALL))
    out = tmp_path / "suite.json"
    assert main(["gen-suite", "--config", str(cfg), "--seed", "4", "--out", str(out)]) == 0
    return out


def _train(tmp_path, suite_path, name="run", extra=(), **overrides):
    cfg = tmp_path / f"{name}.json"
    cfg.write_text(json.dumps({**TRAIN, **overrides}))
    out = tmp_path / name
    code = main(["train", "--config", str(cfg), "--suite", str(suite_path), "--out", str(out), "--workers", "1", *extra])
    return code, out


def test_gen_suite_is_deterministic(tmp_path, suite_path, capsys):
    again = tmp_path / "again.json"
    cfg = tmp_path / "suite_cfg.json"
    assert main(["gen-suite", "--config", str(cfg), "--seed", "4", "--out", str(again)]) == 0
    assert again.read_bytes() == suite_path.read_bytes()
    assert "digest" in capsys.readouterr().out


def test_train_writes_one_metrics_line_per_iteration(tmp_path, suite_path):
    code, out = _train(tmp_path, suite_path)
    assert code == 0
    assert len((out / "metrics.jsonl").read_text().splitlines()) == TRAIN["iterations"]
    assert (out / "checkpoint_final.bin").exists()


def test_ablate_flag_is_recorded(tmp_path, suite_path):
    code, out = _train(tmp_path, suite_path, extra=["--ablate", "spa"])
    assert code == 0
    resolved = json.loads((out / "resolved_config.json").read_text())
    assert resolved["train"]["spa_alpha"] == 0.0 and resolved["ablate"] == ["spa"]
    assert resolved["train"]["fcf_enabled"] is True


def test_seed_flag_overrides_config(tmp_path, suite_path):
    code, out = _train(tmp_path, suite_path, extra=["--seed", "77"], seed=1)
    assert code == 0
    assert json.loads((out / "resolved_config.json").read_text())["train"]["seed"] == 77


def test_eval_and_compare(tmp_path, suite_path):
    _, a = _train(tmp_path, suite_path, name="a")
    _, b = _train(tmp_path, suite_path, name="b", extra=["--ablate", "all"])
    report = tmp_path / "eval.json"
    args = ["eval", "--checkpoint", str(a / "checkpoint_final.bin"), "--suite", str(suite_path)]
    assert main(args + ["--report", str(report), "--trials", "2", "--workers", "1"]) == 0
    assert set(json.loads(report.read_text())["aggregates"]["pass_at_k"]) >= {"overall", "unsolvable"}
    cmp_report = tmp_path / "cmp.json"
    assert (
        main(
            ["compare", "--a", str(a / "checkpoint_final.bin"), "--b", str(b / "checkpoint_final.bin")]
            + ["--suite", str(suite_path), "--report", str(cmp_report), "--workers", "1"]
        )
        == 0
    )
    assert json.loads(cmp_report.read_text())["overall"]["tasks"] == 12


def test_exit_code_bad_config(tmp_path, suite_path):
    assert main(["gen-suite", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "x.json")]) == 2
    code, _ = _train(tmp_path, suite_path, bogus=1)
    assert code == 2
    code, _ = _train(tmp_path, suite_path, group_size=1)
    assert code == 2
    bad = tmp_path / "notjson.json"
    bad.write_text("{")
    assert main(["train", "--config", str(bad), "--suite", str(suite_path), "--out", str(tmp_path / "r")]) == 2
    assert main(["train", "--suite", str(tmp_path / "nosuite.json"), "--out", str(tmp_path / "r")]) == 2


def test_exit_code_over_budget(tmp_path):
    cfg = tmp_path / "tight.json"
    cfg.write_text(json.dumps({"counts": {"hard": 1}, "screens_range": [2, 2]}))
    assert main(["gen-suite", "--config", str(cfg), "--out", str(tmp_path / "x.json")]) == 3


def test_exit_code_non_finite(tmp_path, suite_path, capsys):
    code, out = _train(tmp_path, suite_path, learning_rate=1e308, iterations=6)
    assert code == 4
    assert "iteration" in capsys.readouterr().err
    assert len((out / "metrics.jsonl").read_text().splitlines()) < 6


def test_exit_code_checkpoint(tmp_path, suite_path):
    _, run = _train(tmp_path, suite_path)
    ckpt = run / "checkpoint_final.bin"
    broken = tmp_path / "broken.bin"
    broken.write_bytes(b"NOPE" + ckpt.read_bytes()[4:])
    args = ["eval", "--checkpoint", str(broken), "--suite", str(suite_path), "--report", str(tmp_path / "r.json")]
    assert main(args) == 5
    truncated = tmp_path / "short.bin"
    truncated.write_bytes(ckpt.read_bytes()[:-8])
    args[2] = str(truncated)
    assert main(args) == 5


def test_module_entry_point(tmp_path):
    xml = tmp_path / "n.xml"
    xml.write_text(
        '<hierarchy><node class="android.widget.TextView" text="Audio Recorder" '
        'bounds="[221,1095][858,1222]" content-desc="" /></hierarchy>'
    )
    res = subprocess.run(
        [sys.executable, "-m", "aglb", "compress-xml", "--in", str(xml), "--width", "1080", "--height", "2400"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert res.returncode == 0
    assert res.stdout == "TextView;;Audio Recorder;[221,1095][858,1222]\n"
