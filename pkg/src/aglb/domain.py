"""MDP vocabulary: tasks, actions, steps, trajectories, and the action grammar.

Actions are written in the prompt grammar used by GUI agents::

    do(action="Tap", element=[221,1095,858,1222])
    do(action="Swipe", element=[0,0,1080,2400], direction="down", dist="medium")
    finish(message="done")

``serialize_action`` emits one canonical spelling per command so that logs are
byte-stable, and ``parse_action`` accepts that spelling plus insignificant
whitespace and a few verb aliases.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional

import numpy as np

ACTION_KINDS = ("Tap", "Type", "Swipe", "LongPress", "Launch", "Back", "Home", "Wait", "Finish")
TIERS = ("trivial", "easy", "medium", "hard", "unsolvable")
DIRECTIONS = ("up", "down", "left", "right")
DISTANCES = ("short", "medium", "long")

# Spellings seen in agent prompts for the long-press verb.
_ALIASES = {"Long_Press": "LongPress", "Long_Pres": "LongPress", "Long Press": "LongPress"}

_ARG_ORDER = ("element", "text", "direction", "dist", "app")
_ALLOWED_ARGS = {
    "Tap": {"element"},
    "LongPress": {"element"},
    "Type": {"text"},
    "Swipe": {"element", "direction", "dist"},
    "Launch": {"app"},
    "Back": set(),
    "Home": set(),
    "Wait": set(),
    "Finish": {"message"},
}
_REQUIRED_ARGS = {
    "Tap": ("element",),
    "LongPress": ("element",),
    "Type": ("text",),
    "Swipe": ("direction", "dist"),
    "Launch": ("app",),
}


class ActionParseError(ValueError):
    """Base class for action grammar errors."""


class UnknownAction(ActionParseError):
    pass


class MissingArgument(ActionParseError):
    pass


class MalformedSyntax(ActionParseError):
    pass


Rect = tuple[int, int, int, int]


@dataclass(frozen=True)
class TaskRef:
    task_id: str
    instruction: str
    tier: str

    def __post_init__(self):
        if self.tier not in TIERS:
            raise ValueError(f"unknown tier {self.tier!r}")


@dataclass(frozen=True)
class ActionCommand:
    kind: str
    element: Optional[Rect] = None
    text: Optional[str] = None
    direction: Optional[str] = None
    dist: Optional[str] = None
    app: Optional[str] = None
    message: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ACTION_KINDS:
            raise UnknownAction(f"unknown action kind {self.kind!r}")
        present = {name for name in (*_ARG_ORDER, "message") if getattr(self, name) is not None}
        extra = present - _ALLOWED_ARGS[self.kind]
        if extra:
            raise MalformedSyntax(f"{self.kind} does not take {sorted(extra)}")
        for name in _REQUIRED_ARGS.get(self.kind, ()):
            if getattr(self, name) is None:
                raise MissingArgument(f"{self.kind} requires {name}")
        if self.element is not None:
            if len(self.element) != 4:
                raise MalformedSyntax("element must have four coordinates")
            x1, y1, x2, y2 = self.element
            if x1 > x2 or y1 > y2:
                raise MalformedSyntax(f"degenerate rectangle {list(self.element)}")
        if self.direction is not None and self.direction not in DIRECTIONS:
            raise MalformedSyntax(f"bad direction {self.direction!r}")
        if self.dist is not None and self.dist not in DISTANCES:
            raise MalformedSyntax(f"bad dist {self.dist!r}")

    def __str__(self) -> str:
        return serialize_action(self)


@dataclass(frozen=True)
class Observation:
    compressed_ui: str
    screen_id: str
    focused_field: Optional[str] = None
    scroll_offset: int = 0


@dataclass(frozen=True, eq=False)
class Step:
    """One decision. ``features`` caches the hashed candidate features so that
    replayed steps can be re-scored without the environment."""

    observation: Observation
    action: ActionCommand
    candidates: tuple[ActionCommand, ...]
    behavior_logprob: float
    candidate_behavior_logprobs: np.ndarray
    action_index: int
    features: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.candidates[self.action_index] != self.action:
            raise ValueError("action is not the candidate at action_index")
        lp = np.asarray(self.candidate_behavior_logprobs, dtype=np.float64)
        lp.setflags(write=False)
        object.__setattr__(self, "candidate_behavior_logprobs", lp)
        if self.features is not None:
            self.features.setflags(write=False)


@dataclass(frozen=True, eq=False)
class Trajectory:
    task: TaskRef
    steps: tuple[Step, ...]
    terminal_reward: int
    truncated: bool = False
    origin: str = "fresh"
    replay_count: int = 0

    def __post_init__(self):
        if self.terminal_reward not in (0, 1):
            raise ValueError("terminal_reward must be 0 or 1")
        if not self.steps:
            raise ValueError("a trajectory has at least one step")
        if self.terminal_reward == 1 and (self.truncated or self.steps[-1].action.kind != "Finish"):
            raise ValueError("a successful trajectory must end in Finish without truncation")

    @property
    def length(self) -> int:
        return len(self.steps)

    @property
    def success(self) -> bool:
        return self.terminal_reward == 1


# --------------------------------------------------------------------------
# grammar


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def serialize_action(cmd: ActionCommand) -> str:
    if cmd.kind == "Finish":
        if cmd.message is None:
            return "finish()"
        return f"finish(message={_quote(cmd.message)})"
    parts = [f"action={_quote(cmd.kind)}"]
    for name in _ARG_ORDER:
        value = getattr(cmd, name)
        if value is None:
            continue
        if name == "element":
            parts.append("element=[" + ",".join(str(v) for v in value) + "]")
        else:
            parts.append(f"{name}={_quote(value)}")
    return "do(" + ", ".join(parts) + ")"


_TOKEN_RE = re.compile(r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<int>-?\d+)|(?P<punct>[()\[\],=])|(?P<quote>\"))")


def _tokenize(line: str) -> list[tuple[str, object]]:
    tokens: list[tuple[str, object]] = []
    pos, n = 0, len(line)
    while True:
        while pos < n and line[pos].isspace():
            pos += 1
        if pos >= n:
            return tokens
        if line[pos] == '"':
            pos += 1
            buf = []
            while True:
                if pos >= n:
                    raise MalformedSyntax("unterminated string")
                ch = line[pos]
                if ch == "\\":
                    if pos + 1 >= n or line[pos + 1] not in '"\\':
                        raise MalformedSyntax(f"bad escape at column {pos}")
                    buf.append(line[pos + 1])
                    pos += 2
                elif ch == '"':
                    pos += 1
                    break
                else:
                    buf.append(ch)
                    pos += 1
            tokens.append(("str", "".join(buf)))
            continue
        m = _TOKEN_RE.match(line, pos)
        if m is None or m.end() == pos:
            raise MalformedSyntax(f"unexpected character {line[pos]!r} at column {pos}")
        if m.group("ident") is not None:
            tokens.append(("ident", m.group("ident")))
        elif m.group("int") is not None:
            tokens.append(("int", int(m.group("int"))))
        else:
            tokens.append(("p", m.group("punct")))
        pos = m.end()


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else ("eof", None)

    def take(self, kind, value=None):
        tok = self.peek()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = value if value is not None else kind
            raise MalformedSyntax(f"expected {want!r}, got {tok[1]!r}")
        self.i += 1
        return tok[1]

    def value(self):
        kind, val = self.peek()
        if kind == "str":
            self.i += 1
            return val
        if kind == "p" and val == "[":
            self.i += 1
            nums = [self.take("int")]
            while self.peek() == ("p", ","):
                self.i += 1
                nums.append(self.take("int"))
            self.take("p", "]")
            return tuple(nums)
        raise MalformedSyntax(f"expected a value, got {val!r}")

    def call(self):
        verb = self.take("ident")
        self.take("p", "(")
        args: dict[str, object] = {}
        if self.peek() != ("p", ")"):
            while True:
                name = self.take("ident")
                self.take("p", "=")
                if name in args:
                    raise MalformedSyntax(f"duplicate argument {name}")
                args[name] = self.value()
                if self.peek() == ("p", ","):
                    self.i += 1
                    continue
                break
        self.take("p", ")")
        if self.peek()[0] != "eof":
            raise MalformedSyntax("trailing input after action")
        return verb, args


def _check_balance(line: str) -> None:
    depth = {"(": 0, "[": 0}
    closing = {")": "(", "]": "["}
    in_str = False
    i = 0
    while i < len(line):
        ch = line[i]
        if in_str:
            if ch == "\\":
                i += 1
            elif ch == '"':
                in_str = False
        elif ch == '"':
            in_str = True
        elif ch in depth:
            depth[ch] += 1
        elif ch in closing:
            depth[closing[ch]] -= 1
            if depth[closing[ch]] < 0:
                raise MalformedSyntax(f"unbalanced {ch!r}")
        i += 1
    if in_str:
        raise MalformedSyntax("unterminated string")
    if any(depth.values()):
        raise MalformedSyntax("unbalanced brackets")


def parse_action(line: str) -> ActionCommand:
    _check_balance(line)
    verb, args = _Parser(_tokenize(line)).call()
    if verb == "finish":
        kind = "Finish"
    elif verb == "do":
        if "action" not in args:
            raise MissingArgument("do(...) requires action=")
        kind = args.pop("action")
        if not isinstance(kind, str):
            raise MalformedSyntax("action must be a string")
        kind = _ALIASES.get(kind, kind)
    else:
        raise UnknownAction(f"unknown verb {verb!r}")
    if kind not in ACTION_KINDS:
        raise UnknownAction(f"unknown action {kind!r}")
    for name, value in args.items():
        if name == "element":
            if not isinstance(value, tuple):
                raise MalformedSyntax("element must be a [x1,y1,x2,y2] list")
        elif not isinstance(value, str):
            raise MalformedSyntax(f"{name} must be a string")
    unknown = set(args) - _ALLOWED_ARGS[kind]
    if unknown:
        raise MalformedSyntax(f"{kind} does not take {sorted(unknown)}")
    return ActionCommand(kind=kind, **args)


# --------------------------------------------------------------------------
# trajectory log


def trajectory_record(traj: Trajectory) -> dict:
    return {
        "task_id": traj.task.task_id,
        "tier": traj.task.tier,
        "reward": traj.terminal_reward,
        "length": traj.length,
        "truncated": traj.truncated,
        "steps": [
            {
                "screen_id": s.observation.screen_id,
                "action_text": serialize_action(s.action),
                "candidate_count": len(s.candidates),
                "behavior_logprob": s.behavior_logprob,
            }
            for s in traj.steps
        ],
    }


def write_trajectory_log(trajectories: Iterable[Trajectory], fh: IO[str]) -> int:
    n = 0
    for traj in trajectories:
        fh.write(json.dumps(trajectory_record(traj), sort_keys=True) + "\n")
        n += 1
    return n


def check_step_distribution(step: Step, tol: float = 1e-9) -> bool:
    lp = step.candidate_behavior_logprobs
    return (
        bool(np.all(lp <= 0.0))
        and abs(math.fsum(np.exp(lp)) - 1.0) <= tol
        and step.behavior_logprob == lp[step.action_index]
    )
