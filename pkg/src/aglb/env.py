"""Synthetic mobile-GUI worlds and their finite-horizon MDP.

A :class:`ScreenGraph` is a small single-app world: screens made of
accessibility nodes, Tap edges between screens, Type transitions keyed by the
exact text entered into a focused field, and a goal (a screen, optionally with
text that must be typed there). Transitions are deterministic.

Screens are ``SCREEN_W x SCREEN_H`` pixels. A fixed header holds the screen
title; the area below scrolls one page per Swipe, and elements on other pages
fall off-screen, so the axml off-screen filter decides what the agent sees.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Any, NamedTuple, Optional, Sequence

import numpy as np

from . import axml
from .axml import UiNode
from .domain import ActionCommand, Observation, TaskRef, TIERS

SCREEN_W, SCREEN_H = 1080, 2400
HEADER_H = 240
PAGE_H = SCREEN_H - HEADER_H
SLOTS_PER_PAGE = 8
SLOT_H = PAGE_H // SLOTS_PER_PAGE
MAX_LEXICON = 8
PACKAGE = "com.example.synth"

# Inclusive oracle_min_steps bounds (Finish included) per tier.
TIER_BOUNDS = {"trivial": (1, 3), "easy": (4, 6), "medium": (7, 12), "hard": (13, 24)}


class EnvError(Exception):
    pass


class UnknownTask(EnvError):
    pass


class ActionOutOfGrammar(EnvError):
    pass


class EpisodeDone(EnvError):
    pass


class GenerationOverBudget(EnvError):
    pass


@dataclass(frozen=True)
class Screen:
    screen_id: str
    title: str
    elements: tuple[UiNode, ...]  # content coordinates; y grows across pages
    scroll_pages: int = 1


@dataclass(frozen=True)
class Goal:
    screen_id: str
    required_typed: Optional[str] = None


@dataclass(frozen=True, eq=False)
class ScreenGraph:
    screens: tuple[Screen, ...]
    edges: dict  # (screen_id, element_id) -> screen_id
    type_targets: dict  # (screen_id, element_id, text) -> screen_id
    start_screen: str
    goal: Goal
    lexicon: tuple[str, ...]

    def __post_init__(self):
        ids = {s.screen_id for s in self.screens}
        if self.start_screen not in ids:
            raise ValueError("start_screen does not exist")
        if len(self.lexicon) > MAX_LEXICON:
            raise ValueError("lexicon too large")
        by_id = {s.screen_id: s for s in self.screens}
        for key, dst in list(self.edges.items()) + [((k[0], k[1]), v) for k, v in self.type_targets.items()]:
            src, eid = key
            if src not in ids or dst not in ids:
                raise ValueError(f"edge {key} -> {dst} references a missing screen")
            node = next((e for e in by_id[src].elements if e.resource_id == eid), None)
            if node is None:
                raise ValueError(f"edge {key} references a missing element")
            if not ({"clickable", "focusable"} & node.flags):
                raise ValueError(f"edge {key} starts at an inert element")

    def screen(self, screen_id: str) -> Screen:
        for s in self.screens:
            if s.screen_id == screen_id:
                return s
        raise KeyError(screen_id)

    def to_json(self) -> dict:
        def node_json(n: UiNode) -> dict:
            return {
                "id": n.resource_id,
                "class": n.class_name,
                "text": n.text,
                "content_desc": n.content_desc,
                "bounds": list(n.bounds),
                "flags": sorted(n.flags),
            }

        return {
            "screens": [
                {
                    "screen_id": s.screen_id,
                    "title": s.title,
                    "scroll_pages": s.scroll_pages,
                    "elements": [node_json(n) for n in s.elements],
                }
                for s in self.screens
            ],
            "edges": [[k[0], k[1], v] for k, v in sorted(self.edges.items())],
            "type_targets": [[k[0], k[1], k[2], v] for k, v in sorted(self.type_targets.items())],
            "start_screen": self.start_screen,
            "goal": {"screen_id": self.goal.screen_id, "required_typed": self.goal.required_typed},
            "lexicon": list(self.lexicon),
        }

    @classmethod
    def from_json(cls, d: dict) -> "ScreenGraph":
        screens = tuple(
            Screen(
                screen_id=s["screen_id"],
                title=s["title"],
                scroll_pages=int(s["scroll_pages"]),
                elements=tuple(
                    UiNode(
                        class_name=n["class"],
                        text=n["text"],
                        content_desc=n["content_desc"],
                        resource_id=n["id"],
                        package=PACKAGE,
                        bounds=tuple(n["bounds"]),
                        flags=frozenset(n["flags"]),
                    )
                    for n in s["elements"]
                ),
            )
            for s in d["screens"]
        )
        return cls(
            screens=screens,
            edges={(a, b): c for a, b, c in d["edges"]},
            type_targets={(a, b, t): c for a, b, t, c in d["type_targets"]},
            start_screen=d["start_screen"],
            goal=Goal(d["goal"]["screen_id"], d["goal"].get("required_typed")),
            lexicon=tuple(d["lexicon"]),
        )


@dataclass(frozen=True)
class SuiteConfig:
    """Suite generation knobs.

    ``screens_range`` bounds the total number of screens in one graph,
    ``branching_range`` the distractor buttons per solution screen and
    ``distractor_range`` the number of off-path screens they lead to.
    """

    counts: dict = field(default_factory=lambda: {"trivial": 4, "easy": 4, "medium": 4, "hard": 2, "unsolvable": 2})
    screens_range: tuple[int, int] = (2, 16)
    branching_range: tuple[int, int] = (1, 3)
    distractor_range: tuple[int, int] = (1, 3)
    horizon: int = 50
    require_type_fraction: float = 0.25
    require_swipe_fraction: float = 0.25

    def __post_init__(self):
        for tier, n in self.counts.items():
            if tier not in TIERS:
                raise ValueError(f"counts: unknown tier {tier!r}")
            if not isinstance(n, int) or n < 0:
                raise ValueError(f"counts.{tier}: must be a non-negative integer")
        if self.horizon < 1:
            raise ValueError("horizon: must be >= 1")
        for name in ("screens_range", "branching_range", "distractor_range"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise ValueError(f"{name}: invalid range {(lo, hi)}")
        for name in ("require_type_fraction", "require_swipe_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}: must lie in [0, 1]")

    @classmethod
    def from_dict(cls, d: dict) -> "SuiteConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown suite config keys: {sorted(unknown)}")
        kw = dict(d)
        for name in ("screens_range", "branching_range", "distractor_range"):
            if name in kw:
                kw[name] = tuple(kw[name])
        return cls(**kw)

    def to_dict(self) -> dict:
        return {
            "counts": dict(self.counts),
            "screens_range": list(self.screens_range),
            "branching_range": list(self.branching_range),
            "distractor_range": list(self.distractor_range),
            "horizon": self.horizon,
            "require_type_fraction": self.require_type_fraction,
            "require_swipe_fraction": self.require_swipe_fraction,
        }


@dataclass(frozen=True)
class EnvState:
    screen_id: str
    scroll_offset: int = 0
    focused_field: Optional[str] = None
    typed_text: Optional[str] = None
    prev_screen: Optional[str] = None
    steps_taken: int = 0
    done: bool = False

    @property
    def key(self) -> tuple:
        """The Markov part of the state (everything except the step counter)."""
        return (self.screen_id, self.scroll_offset, self.focused_field, self.typed_text, self.prev_screen)


class StepResult(NamedTuple):
    state: EnvState
    observation: Observation
    done: bool
    reward: int
    truncated: bool


class TaskEnv:
    """Episode server for one task. Holds render and candidate caches."""

    def __init__(self, graph: ScreenGraph, task: TaskRef, horizon: int = 50):
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        self.graph = graph
        self.task = task
        self.horizon = horizon
        self._screens = {s.screen_id: s for s in graph.screens}
        self._obs_cache: dict[tuple, Observation] = {}
        self._cand_cache: dict[tuple, tuple[ActionCommand, ...]] = {}
        self._visible_cache: dict[tuple, tuple[tuple[UiNode, UiNode], ...]] = {}
        # per-instance scratch space for policy feature caches
        self.feature_cache: dict = {}

    # -- rendering ---------------------------------------------------------

    def _visible(self, screen_id: str, offset: int) -> tuple[tuple[UiNode, UiNode], ...]:
        """(content node, on-screen node) pairs of elements on the current page."""
        key = (screen_id, offset)
        hit = self._visible_cache.get(key)
        if hit is None:
            shift = offset * PAGE_H
            out = []
            for node in self._screens[screen_id].elements:
                x1, y1, x2, y2 = node.bounds
                moved = (x1, y1 - shift, x2, y2 - shift)
                if moved[1] >= HEADER_H and moved[3] <= SCREEN_H:
                    out.append((node, replace(node, bounds=moved)))
            hit = self._visible_cache[key] = tuple(out)
        return hit

    def render(self, key: tuple) -> UiNode:
        screen_id, offset, focused, typed, _ = key
        screen = self._screens[screen_id]
        shift = offset * PAGE_H
        content = []
        for node in screen.elements:
            x1, y1, x2, y2 = node.bounds
            flags = node.flags
            text = node.text
            if node.resource_id == focused:
                flags = flags | {"focused"}
            if node.class_name.endswith("EditText") and typed is not None:
                text = typed
            content.append(replace(node, bounds=(x1, y1 - shift, x2, y2 - shift), flags=flags, text=text))
        scroll_flags = {"scrollable"} if screen.scroll_pages > 1 else set()
        body = UiNode(
            class_name="androidx.recyclerview.widget.RecyclerView" if scroll_flags else "android.widget.LinearLayout",
            resource_id=f"{PACKAGE}:id/body",
            package=PACKAGE,
            bounds=(0, HEADER_H, SCREEN_W, SCREEN_H),
            flags=frozenset(scroll_flags | {"enabled"}),
            children=tuple(content),
        )
        header = UiNode(
            class_name="android.widget.FrameLayout",
            resource_id=f"{PACKAGE}:id/toolbar",
            package=PACKAGE,
            bounds=(0, 0, SCREEN_W, HEADER_H),
            flags=frozenset({"enabled"}),
            children=(
                UiNode(
                    class_name="android.widget.TextView",
                    text=screen.title,
                    resource_id=f"{PACKAGE}:id/title",
                    package=PACKAGE,
                    bounds=(40, 60, 1040, 180),
                    flags=frozenset({"enabled"}),
                ),
            ),
        )
        return UiNode(
            class_name="android.widget.FrameLayout",
            package=PACKAGE,
            bounds=(0, 0, SCREEN_W, SCREEN_H),
            flags=frozenset({"enabled"}),
            children=(header, body),
        )

    def observe(self, state: EnvState) -> Observation:
        key = state.key
        obs = self._obs_cache.get(key)
        if obs is None:
            text = axml.compress(self.render(key), SCREEN_W, SCREEN_H, keep_offscreen=False).text()
            obs = Observation(
                compressed_ui=text,
                screen_id=state.screen_id,
                focused_field=state.focused_field,
                scroll_offset=state.scroll_offset,
            )
            self._obs_cache[key] = obs
        return obs

    # -- dynamics ----------------------------------------------------------

    def reset(self, episode_seed: int = 0) -> EnvState:
        # Initial states are deterministic; the seed is accepted for interface symmetry.
        del episode_seed
        return EnvState(screen_id=self.graph.start_screen)

    def candidates(self, state: EnvState) -> tuple[ActionCommand, ...]:
        key = state.key
        hit = self._cand_cache.get(key)
        if hit is not None:
            return hit
        screen = self._screens[state.screen_id]
        out = [
            ActionCommand("Tap", element=shown.bounds)
            for _, shown in self._visible(state.screen_id, state.scroll_offset)
            if "clickable" in shown.flags
        ]
        if state.focused_field is not None:
            out.extend(ActionCommand("Type", text=w) for w in self.graph.lexicon)
        if screen.scroll_pages > 1:
            out.append(ActionCommand("Swipe", direction="up", dist="medium"))
            out.append(ActionCommand("Swipe", direction="down", dist="medium"))
        out.extend(ActionCommand(k) for k in ("Back", "Home", "Wait"))
        out.append(ActionCommand("Finish"))
        hit = self._cand_cache[key] = tuple(out)
        return hit

    def goal_holds(self, key: tuple) -> bool:
        goal = self.graph.goal
        return key[0] == goal.screen_id and (goal.required_typed is None or key[3] == goal.required_typed)

    def _element_at(self, key: tuple, rect) -> UiNode:
        for content, shown in self._visible(key[0], key[1]):
            if shown.bounds == tuple(rect):
                return content
        raise ActionOutOfGrammar(f"no visible element at {list(rect)} on {key[0]}")

    def transition(self, key: tuple, action: ActionCommand) -> tuple[tuple, bool, bool]:
        """Pure Markov transition: returns (next key, finished, success)."""
        screen_id, offset, focused, typed, prev = key

        def move(dst: str) -> tuple:
            return (dst, 0, None, None, screen_id)

        kind = action.kind
        if action.element is not None:
            node = self._element_at(key, action.element)
        if kind == "Tap":
            dst = self.graph.edges.get((screen_id, node.resource_id))
            if dst is not None:
                return move(dst), False, False
            if "focusable" in node.flags:
                return (screen_id, offset, node.resource_id, typed, prev), False, False
            return key, False, False
        if kind == "Type":
            if focused is None:
                return key, False, False
            dst = self.graph.type_targets.get((screen_id, focused, action.text))
            if dst is not None:
                return move(dst), False, False
            return (screen_id, offset, focused, action.text, prev), False, False
        if kind == "Swipe":
            pages = self._screens[screen_id].scroll_pages
            if action.direction == "down":
                offset = min(offset + 1, pages - 1)
            elif action.direction == "up":
                offset = max(offset - 1, 0)
            return (screen_id, offset, focused, typed, prev), False, False
        if kind == "Back":
            if prev is None:
                return key, False, False
            return (prev, 0, None, None, None), False, False
        if kind == "Home":
            start = self.graph.start_screen
            if screen_id == start:
                return (start, 0, None, typed, prev), False, False
            return move(start), False, False
        if kind == "Finish":
            return key, True, self.goal_holds(key)
        # Wait, Launch, LongPress
        return key, False, False

    def step(self, state: EnvState, action: ActionCommand) -> StepResult:
        if state.done:
            raise EpisodeDone("episode already finished")
        key, finished, success = self.transition(state.key, action)
        steps = state.steps_taken + 1
        truncated = False
        if finished:
            done, reward = True, int(success)
        elif steps >= self.horizon:
            done, reward, truncated = True, 0, True
        else:
            done, reward = False, 0
        screen_id, offset, focused, typed, prev = key
        new = EnvState(screen_id, offset, focused, typed, prev, steps, done)
        return StepResult(new, self.observe(new), done, reward, truncated)

    # -- oracle ------------------------------------------------------------

    def _candidates_for_key(self, key: tuple) -> tuple[ActionCommand, ...]:
        return self.candidates(EnvState(*key))

    def oracle_path(self) -> Optional[list[ActionCommand]]:
        """One shortest successful action sequence (ending in Finish), or None.

        Breadth-first search over the Markov state; the horizon is ignored.
        Ties go to the first candidate in enumeration order.
        """
        start = self.reset().key
        parent: dict[tuple, Optional[tuple]] = {start: None}
        frontier = deque([start])
        while frontier:
            key = frontier.popleft()
            if self.goal_holds(key):
                path = [ActionCommand("Finish")]
                while parent[key] is not None:
                    key, action = parent[key]
                    path.append(action)
                return path[::-1]
            for action in self._candidates_for_key(key):
                if action.kind == "Finish":
                    continue
                nxt, _, _ = self.transition(key, action)
                if nxt not in parent:
                    parent[nxt] = (key, action)
                    frontier.append(nxt)
        return None

    def oracle_min_steps(self) -> Optional[int]:
        """Fewest actions (Finish included) that end the episode with reward 1,
        or None when the goal is unreachable."""
        path = self.oracle_path()
        return None if path is None else len(path)


# ---------------------------------------------------------------------------
# module-level surface


@dataclass
class Suite:
    tasks: list  # list of (TaskRef, ScreenGraph)
    seed: int = 0
    oracle: dict = field(default_factory=dict)  # task_id -> oracle_min_steps

    def __post_init__(self):
        self._index = {t.task_id: i for i, (t, _) in enumerate(self.tasks)}
        if len(self._index) != len(self.tasks):
            raise ValueError("duplicate task_id in suite")
        self._envs: dict[tuple[str, int], TaskEnv] = {}

    def __len__(self) -> int:
        return len(self.tasks)

    @property
    def refs(self) -> list[TaskRef]:
        return [t for t, _ in self.tasks]

    def ref(self, task_id: str) -> TaskRef:
        try:
            return self.tasks[self._index[task_id]][0]
        except KeyError:
            raise UnknownTask(task_id) from None

    def graph(self, task_id: str) -> ScreenGraph:
        try:
            return self.tasks[self._index[task_id]][1]
        except KeyError:
            raise UnknownTask(task_id) from None

    def env(self, task_id: str, horizon: int = 50) -> TaskEnv:
        key = (task_id, horizon)
        env = self._envs.get(key)
        if env is None:
            if task_id not in self._index:
                raise UnknownTask(task_id)
            task, graph = self.tasks[self._index[task_id]]
            env = self._envs[key] = TaskEnv(graph, task, horizon)
        return env

    def to_json(self) -> dict:
        return {
            "suite_seed": self.seed,
            "tasks": [
                {
                    "task_id": t.task_id,
                    "tier": t.tier,
                    "instruction": t.instruction,
                    "oracle_min_steps": self.oracle.get(t.task_id, oracle_min_steps(g, t)),
                    "graph": g.to_json(),
                }
                for t, g in self.tasks
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, d: dict) -> "Suite":
        tasks = []
        oracle = {}
        for item in d["tasks"]:
            ref = TaskRef(item["task_id"], item["instruction"], item["tier"])
            tasks.append((ref, ScreenGraph.from_json(item["graph"])))
            oracle[ref.task_id] = item.get("oracle_min_steps")
        return cls(tasks=tasks, seed=int(d.get("suite_seed", 0)), oracle=oracle)

    @classmethod
    def load(cls, path) -> "Suite":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()


def reset(graph: ScreenGraph, task: TaskRef, episode_seed: int = 0, horizon: int = 50) -> tuple[EnvState, Observation]:
    env = TaskEnv(graph, task, horizon)
    state = env.reset(episode_seed)
    return state, env.observe(state)


def step(graph: ScreenGraph, task: TaskRef, state: EnvState, action: ActionCommand, horizon: int = 50) -> StepResult:
    return TaskEnv(graph, task, horizon).step(state, action)


def enumerate_candidates(graph: ScreenGraph, task: TaskRef, state: EnvState) -> tuple[ActionCommand, ...]:
    return TaskEnv(graph, task).candidates(state)


def oracle_min_steps(graph: ScreenGraph, task: TaskRef) -> Optional[int]:
    return TaskEnv(graph, task).oracle_min_steps()


def tier_for(min_steps: Optional[int]) -> str:
    if min_steps is None:
        return "unsolvable"
    for tier, (lo, hi) in TIER_BOUNDS.items():
        if lo <= min_steps <= hi:
            return tier
    raise ValueError(f"oracle length {min_steps} is beyond every tier")


# ---------------------------------------------------------------------------
# generation

_ONSETS = ("b", "c", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "cl", "st", "tr")
_VOWELS = ("a", "e", "i", "o", "u")
_FIELD_HINTS = ("Search", "Find", "Query")


def _word(rng: np.random.Generator) -> str:
    syll = int(rng.integers(2, 4))
    return "".join(_ONSETS[rng.integers(len(_ONSETS))] + _VOWELS[rng.integers(len(_VOWELS))] for _ in range(syll))


class _Builder:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.used: set[str] = set()
        self.n_elements = 0

    def word(self) -> str:
        while True:
            w = _word(self.rng)
            if w not in self.used:
                self.used.add(w)
                return w

    def eid(self) -> str:
        self.n_elements += 1
        return f"{PACKAGE}:id/e{self.n_elements}"


def _slot_bounds(page: int, slot: int) -> tuple[int, int, int, int]:
    y1 = HEADER_H + page * PAGE_H + slot * SLOT_H + 20
    return (60, y1, 1020, y1 + SLOT_H - 40)


def _layout(rng, items: list[tuple[int, dict]], pages: int) -> tuple[UiNode, ...]:
    """Place (page, spec) items into free slots; returns nodes in document order."""
    per_page: dict[int, list[dict]] = {p: [] for p in range(pages)}
    for page, spec in items:
        per_page[page].append(spec)
    nodes = []
    for page in range(pages):
        specs = per_page[page]
        if len(specs) > SLOTS_PER_PAGE:
            raise GenerationOverBudget("too many elements for one page")
        slots = sorted(rng.choice(SLOTS_PER_PAGE, size=len(specs), replace=False).tolist())
        order = rng.permutation(len(specs)).tolist()
        for slot, idx in zip(slots, order):
            spec = specs[idx]
            nodes.append(
                UiNode(
                    class_name=spec["class"],
                    text=spec.get("text", ""),
                    content_desc=spec.get("desc", ""),
                    resource_id=spec["id"],
                    package=PACKAGE,
                    bounds=_slot_bounds(page, slot),
                    flags=frozenset(spec["flags"]),
                )
            )
    return tuple(nodes)


def _plan_costs(rng, total: int, max_hops: int) -> Optional[list[int]]:
    """Split ``total`` into hop costs in {1, 2, 3} using at most ``max_hops`` hops."""
    lo = math.ceil(total / 3)
    hi = min(total, max_hops)
    if total <= 0 or lo > hi:
        return None
    n = int(rng.integers(lo, hi + 1))
    costs = [1] * n
    extra = total - n
    while extra > 0:
        open_ = [i for i, c in enumerate(costs) if c < 3]
        i = open_[int(rng.integers(len(open_)))]
        costs[i] += 1
        extra -= 1
    return costs


def _build_task(rng: np.random.Generator, tier: str, cfg: SuiteConfig, task_id: str):
    b = _Builder(rng)
    unsolvable = tier == "unsolvable"
    lo, hi = TIER_BOUNDS["medium" if unsolvable and rng.random() < 0.5 else ("easy" if unsolvable else tier)]
    target = int(rng.integers(lo, hi + 1))
    n_distract = int(rng.integers(cfg.distractor_range[0], cfg.distractor_range[1] + 1))
    max_path = cfg.screens_range[1] - n_distract
    typed_goal = target >= 3 and rng.random() < cfg.require_type_fraction
    hop_total = target - 1 - (2 if typed_goal else 0)
    if hop_total == 0:
        costs: Optional[list[int]] = []
    else:
        costs = _plan_costs(rng, hop_total, max_path - 1)
    if costs is None:
        return None
    n_path = len(costs) + 1
    if n_path + n_distract < cfg.screens_range[0]:
        n_distract = cfg.screens_range[0] - n_path
    if n_path + n_distract > cfg.screens_range[1]:
        return None

    path_ids = [f"s{i}" for i in range(n_path)]
    distract_ids = [f"d{i}" for i in range(n_distract)]
    titles = {sid: b.word() for sid in path_ids + distract_ids}
    items: dict[str, list[tuple[int, dict]]] = {sid: [] for sid in path_ids + distract_ids}
    pages: dict[str, int] = {sid: 1 for sid in path_ids + distract_ids}
    edges: dict = {}
    type_targets: dict = {}
    lexicon: list[str] = []
    phrases: list[str] = []

    def button(label: str, eid: str) -> dict:
        return {"class": "android.widget.Button", "text": label, "id": eid, "flags": {"clickable", "enabled"}}

    def field_spec(eid: str) -> dict:
        hint = _FIELD_HINTS[int(rng.integers(len(_FIELD_HINTS)))]
        return {
            "class": "android.widget.EditText",
            "desc": hint,
            "id": eid,
            "flags": {"clickable", "focusable", "long-clickable", "enabled"},
        }, hint

    for i, cost in enumerate(costs):
        src, dst = path_ids[i], path_ids[i + 1]
        use_type = cost >= 2 and rng.random() < cfg.require_type_fraction
        if use_type:
            page = cost - 2
            eid = b.eid()
            spec, hint = field_spec(eid)
            word = titles[dst]
            items[src].append((page, spec))
            type_targets[(src, eid, word)] = dst
            lexicon.append(word)
            phrases.append(f'{hint.lower()} "{word}"')
        else:
            page = cost - 1
            eid = b.eid()
            items[src].append((page, button(titles[dst], eid)))
            edges[(src, eid)] = dst
            phrases.append(f'open "{titles[dst]}"')
        pages[src] = max(pages[src], page + 1)

    goal_screen = path_ids[-1]
    required = None
    if typed_goal:
        eid = b.eid()
        spec, hint = field_spec(eid)
        required = b.word()
        items[goal_screen].append((0, spec))
        lexicon.append(required)
        phrases.append(f'type "{required}"')

    # extra pages on some screens so Swipe is not a reliable tell
    for sid in path_ids + distract_ids:
        if rng.random() < cfg.require_swipe_fraction:
            pages[sid] = min(3, pages[sid] + 1)

    # distractor buttons lead off the solution path only
    for sid in path_ids:
        n_branch = int(rng.integers(cfg.branching_range[0], cfg.branching_range[1] + 1))
        for _ in range(n_branch):
            if not distract_ids:
                break
            dst = distract_ids[int(rng.integers(len(distract_ids)))]
            eid = b.eid()
            label = titles[dst] if rng.random() < 0.5 else b.word()
            items[sid].append((int(rng.integers(pages[sid])), button(label, eid)))
            edges[(sid, eid)] = dst
    for sid in distract_ids:
        for _ in range(int(rng.integers(1, 3))):
            choices = [d for d in distract_ids if d != sid] + [path_ids[0]]
            dst = choices[int(rng.integers(len(choices)))]
            eid = b.eid()
            items[sid].append((int(rng.integers(pages[sid])), button(b.word(), eid)))
            edges[(sid, eid)] = dst
        if rng.random() < 0.5:
            eid = b.eid()
            spec, _ = field_spec(eid)
            items[sid].append((0, spec))
    # passive labels
    for sid in path_ids + distract_ids:
        if rng.random() < 0.5:
            items[sid].append((0, {"class": "android.widget.TextView", "text": b.word(), "id": b.eid(), "flags": {"enabled"}}))

    for _ in range(int(rng.integers(1, 3))):
        if len(lexicon) < MAX_LEXICON:
            lexicon.append(b.word())

    if unsolvable:
        # cut the goal off: drop the last hop, or make the required text untypeable
        if required is not None and rng.random() < 0.5:
            lexicon.remove(required)
        elif costs:
            last = path_ids[-2]
            for key in [k for k, v in edges.items() if k[0] == last and v == goal_screen]:
                del edges[key]
            for key in [k for k, v in type_targets.items() if k[0] == last and v == goal_screen]:
                del type_targets[key]
        else:
            return None

    if len(lexicon) > MAX_LEXICON:
        return None
    perm = rng.permutation(len(lexicon)).tolist()
    lexicon = [lexicon[i] for i in perm]

    screens = []
    for sid in path_ids + distract_ids:
        try:
            elements = _layout(rng, items[sid], pages[sid])
        except GenerationOverBudget:
            return None
        screens.append(Screen(sid, titles[sid], elements, pages[sid]))
    graph = ScreenGraph(
        screens=tuple(screens),
        edges=edges,
        type_targets=type_targets,
        start_screen=path_ids[0],
        goal=Goal(goal_screen, required),
        lexicon=tuple(lexicon),
    )
    if phrases:
        instruction = ", then ".join(phrases)
        instruction = instruction[0].upper() + instruction[1:] + ", and finish."
    else:
        instruction = f'Stay on "{titles[goal_screen]}" and finish.'
    task = TaskRef(task_id, instruction, tier)
    return task, graph


def generate_suite(config: SuiteConfig, seed: int, max_attempts: int = 1000) -> Suite:
    """Generate ``config.counts`` tasks per tier; a pure function of (config, seed)."""
    tasks = []
    oracle = {}
    for tier in TIERS:
        n = config.counts.get(tier, 0)
        rng = np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, TIERS.index(tier)]))
        for i in range(n):
            task_id = f"{tier}-{i:04d}"
            for _ in range(max_attempts):
                built = _build_task(rng, tier, config, task_id)
                if built is None:
                    continue
                ref, graph = built
                steps = TaskEnv(graph, ref, config.horizon).oracle_min_steps()
                if tier_for(steps) == tier and (steps is None or steps <= config.horizon):
                    tasks.append((ref, graph))
                    oracle[task_id] = steps
                    break
            else:
                raise GenerationOverBudget(f"could not build a {tier} task in {max_attempts} attempts")
    return Suite(tasks=tasks, seed=seed, oracle=oracle)


def suite_from_any(obj: Any) -> Suite:
    if isinstance(obj, Suite):
        return obj
    if isinstance(obj, dict):
        return Suite.from_json(obj)
    return Suite.load(obj)


def build_graph(
    screens: Sequence[tuple[str, Sequence[UiNode], int]],
    edges: dict,
    start: str,
    goal: Goal,
    type_targets: Optional[dict] = None,
    lexicon: Sequence[str] = (),
) -> ScreenGraph:
    """Convenience constructor for hand-written graphs; titles default to ids."""
    return ScreenGraph(
        screens=tuple(Screen(sid, sid, tuple(els), pages) for sid, els, pages in screens),
        edges=dict(edges),
        type_targets=dict(type_targets or {}),
        start_screen=start,
        goal=goal,
        lexicon=tuple(lexicon),
    )


def make_button(eid: str, label: str, page: int = 0, slot: int = 0) -> UiNode:
    return UiNode(
        class_name="android.widget.Button",
        text=label,
        resource_id=eid,
        package=PACKAGE,
        bounds=_slot_bounds(page, slot),
        flags=frozenset({"clickable", "enabled"}),
    )


def make_field(eid: str, hint: str = "Search", page: int = 0, slot: int = 0) -> UiNode:
    return UiNode(
        class_name="android.widget.EditText",
        content_desc=hint,
        resource_id=eid,
        package=PACKAGE,
        bounds=_slot_bounds(page, slot),
        flags=frozenset({"clickable", "focusable", "enabled"}),
    )
