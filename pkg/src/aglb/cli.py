"""Command-line entry point ``aglb``.

Exit codes: 0 ok, 2 bad arguments or configuration, 3 suite generation over
budget, 4 non-finite loss during training, 5 checkpoint/header mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import axml, evalkit
from .adagrpo import NonFiniteValue, TrainConfig, Trainer
from .env import GenerationOverBudget, Suite, SuiteConfig, generate_suite
from .policy import CheckpointError, load_checkpoint
from .runtime import default_workers

EXIT_CONFIG = 2
EXIT_OVER_BUDGET = 3
EXIT_NONFINITE = 4
EXIT_CHECKPOINT = 5

RUNTIME_KEYS = ("workers", "backend")

log = logging.getLogger("aglb")


class ConfigError(Exception):
    pass


def _read_json(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return data


def _load_suite(path: str) -> Suite:
    try:
        return Suite.load(path)
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file") from None
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: not a task suite ({exc})") from None


def _workers(arg: Optional[int]) -> int:
    # AGLB_WORKERS wins over everything else
    if os.environ.get("AGLB_WORKERS"):
        return default_workers()
    return arg if arg is not None else default_workers()


def cmd_gen_suite(args) -> int:
    raw = _read_json(args.config)
    try:
        cfg = SuiteConfig.from_dict(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    suite = generate_suite(cfg, args.seed)
    Path(args.out).write_text(suite.dumps())
    stats = {}
    for ref in suite.refs:
        s = stats.setdefault(ref.tier, {"count": 0, "min_steps": []})
        s["count"] += 1
        s["min_steps"].append(suite.oracle[ref.task_id])
    for tier, s in stats.items():
        steps = [x for x in s["min_steps"] if x is not None]
        span = f"{min(steps)}-{max(steps)}" if steps else "unreachable"
        print(f"{tier:<11} {s['count']:>4} tasks  oracle steps {span}")
    print(f"digest {suite.digest()}")
    return 0


def cmd_train(args) -> int:
    raw = _read_json(args.config)
    runtime = {k: raw.pop(k) for k in RUNTIME_KEYS if k in raw}
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        cfg = TrainConfig.from_dict(raw)
        if args.ablate:
            cfg = cfg.ablate(*args.ablate)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    suite = _load_suite(args.suite)
    workers = _workers(args.workers if args.workers is not None else runtime.get("workers"))
    backend = runtime.get("backend", "process")
    if backend not in ("process", "thread"):
        raise ConfigError(f"backend: unknown value {backend!r}")
    extra = {"suite_digest": suite.digest(), "ablate": sorted(args.ablate or [])}
    trainer = Trainer(suite, cfg, workers=workers, backend=backend, out_dir=Path(args.out), extra_config=extra)
    try:
        trainer.run(lambda m: log.info("iter %d success %.3f loss %.4f", m["iter"], m["success_rate"], m["loss"]))
    except NonFiniteValue as exc:
        print(f"error: non-finite value at iteration {trainer.state.iteration + 1}: {exc}", file=sys.stderr)
        return EXIT_NONFINITE
    last = trainer.history[-1] if trainer.history else {}
    print(f"trained {len(trainer.history)} iterations; final success_rate {last.get('success_rate', 0.0):.3f}")
    print(f"run directory {args.out} (config_hash {trainer.config_hash})")
    return 0


def cmd_eval(args) -> int:
    suite = _load_suite(args.suite)
    policy = load_checkpoint(args.checkpoint)
    if args.trials < 1:
        raise ConfigError("--trials: must be >= 1")
    if args.temperature < 0:
        raise ConfigError("--temperature: must be >= 0")
    report = evalkit.evaluate(
        policy, suite, args.trials, args.temperature, args.seed, args.horizon, _workers(args.workers)
    )
    evalkit.write_report(report, args.report)
    for tier, ks in report.pass_at_k.items():
        cells = "  ".join(f"pass@{k} {v:.3f}" for k, v in ks.items())
        print(f"{tier:<11} {cells}")
    return 0


def cmd_compare(args) -> int:
    suite = _load_suite(args.suite)
    a = load_checkpoint(args.a)
    b = load_checkpoint(args.b)
    report = evalkit.compare_spa(a, b, suite, args.seed, args.horizon, _workers(args.workers))
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    rows = list(report.per_tier.items()) + [("overall", report.overall)]
    for tier, t in rows:
        print(
            f"{tier:<11} BC {t['BC']:>4} BW {t['BW']:>4} Others {t['Others']:>4}  "
            f"win {t['win']:>4} tie {t['tie']:>4} loss {t['loss']:>4}"
        )
    return 0


def cmd_compress_xml(args) -> int:
    try:
        text = Path(args.input).read_text()
    except FileNotFoundError:
        raise ConfigError(f"{args.input}: no such file") from None
    try:
        forest = axml.parse_hierarchy(text)
    except (ValueError, SyntaxError) as exc:
        raise ConfigError(f"{args.input}: {exc}") from None
    out = axml.compress(forest, args.width, args.height, keep_offscreen=args.keep_offscreen).text()
    sys.stdout.write(out + ("\n" if out else ""))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aglb", description="Adaptive GRPO on synthetic mobile-GUI tasks.")
    p.add_argument("-v", "--verbose", action="store_true", help="log every training iteration")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-suite", help="generate a task suite")
    g.add_argument("--config", help="suite config JSON (defaults if omitted)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_suite)

    t = sub.add_parser("train", help="train a policy")
    t.add_argument("--config", help="train config JSON (defaults if omitted)")
    t.add_argument("--suite", required=True)
    t.add_argument("--out", required=True, help="run directory")
    t.add_argument("--ablate", action="append", choices=["spa", "adapr", "fcf", "all"])
    t.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    t.add_argument("--workers", type=int, default=None)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="pass@k evaluation")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--suite", required=True)
    e.add_argument("--report", required=True)
    e.add_argument("--trials", type=int, default=8)
    e.add_argument("--temperature", type=float, default=1.0)
    e.add_argument("--horizon", type=int, default=50)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--workers", type=int, default=None)
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("compare", help="greedy step-efficiency comparison of two checkpoints")
    c.add_argument("--a", required=True)
    c.add_argument("--b", required=True)
    c.add_argument("--suite", required=True)
    c.add_argument("--report")
    c.add_argument("--horizon", type=int, default=50)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--workers", type=int, default=None)
    c.set_defaults(func=cmd_compare)

    x = sub.add_parser("compress-xml", help="compress a UI hierarchy dump")
    x.add_argument("--in", dest="input", required=True)
    x.add_argument("--width", type=int, required=True)
    x.add_argument("--height", type=int, required=True)
    x.add_argument("--keep-offscreen", action="store_true")
    x.add_argument("--seed", type=int, default=0, help="accepted for uniformity; unused")
    x.set_defaults(func=cmd_compress_xml)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GenerationOverBudget as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OVER_BUDGET
    except CheckpointError as exc:
        print(f"error: checkpoint: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
