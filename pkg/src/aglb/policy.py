"""Hashed-feature linear softmax policy over enumerable candidate actions.

Each (observation, candidate) pair maps to exactly ``k`` indices into a weight
vector of dimension ``D``; the candidate's logit is the sum of those weights.
Indices come from FNV-1a 64 (offset basis 0xcbf29ce484222325, prime
0x100000001b3) over ``SALT + key`` in UTF-8, reduced modulo ``D``. The hash is
portable and is the same in the compiled and numpy kernels.

Feature keys per candidate, in order:

* a few structural keys (action kind, whether the candidate's label appears
  among the quoted targets of the instruction, how far the screen has
  progressed through those targets) that generalise across tasks;
* crossed tokens of the candidate and of the compressed UI;
* padding keys salted with the serialized candidate, up to ``k``.
"""

from __future__ import annotations

import json
import math
import re
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .domain import ActionCommand, Observation, serialize_action

SALT = "aglb/v1|"
DEFAULT_DIM = 1 << 16
DEFAULT_K = 32
MAGIC = b"AGLB"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sIII")  # magic, version, D, k

_WORD_RE = re.compile(r"[a-z0-9]+")
_QUOTED_RE = re.compile(r'"([^"]*)"')
_LINE_RE = re.compile(r"^(\s*)(.*)$")


class EmptyCandidateSet(ValueError):
    pass


class SupportMismatch(ValueError):
    pass


class NonFiniteValue(FloatingPointError):
    """A loss, gradient, weight or logit overflowed or became NaN."""


class CheckpointError(ValueError):
    pass


@dataclass
class PolicyParams:
    weights: np.ndarray
    version: int = 0
    k: int = DEFAULT_K

    def __post_init__(self):
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 1:
            raise ValueError("weights must be a flat vector")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights contain NaN or Inf")

    @classmethod
    def zeros(cls, dim: int = DEFAULT_DIM, k: int = DEFAULT_K) -> "PolicyParams":
        return cls(np.zeros(dim), 0, k)

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def snapshot(self) -> "PolicyParams":
        w = self.weights.copy()
        w.setflags(write=False)
        return PolicyParams(w, self.version, self.k)

    def copy(self) -> "PolicyParams":
        return PolicyParams(self.weights.copy(), self.version, self.k)


# ---------------------------------------------------------------------------
# featurization


@dataclass(frozen=True)
class _UiLine:
    cls: str
    desc: str
    text: str
    bounds: str
    flags: frozenset


def _split_line(line: str) -> _UiLine:
    parts = []
    buf = []
    i = 0
    while i < len(line):
        ch = line[i]
        if ch == "\\" and i + 1 < len(line):
            buf.append(line[i + 1])
            i += 2
            continue
        if ch == ";":
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
        i += 1
    parts.append("".join(buf))
    parts += [""] * (4 - len(parts))
    return _UiLine(parts[0], parts[1], parts[2], parts[3], frozenset(parts[4:]))


@dataclass
class _UiView:
    lines: list
    tokens: list
    by_bounds: dict


def _ui_view(compressed_ui: str) -> _UiView:
    lines = [_split_line(_LINE_RE.match(raw).group(2)) for raw in compressed_ui.splitlines() if raw.strip()]
    tokens: list[str] = []
    seen = set()
    for ln in lines:
        for tok in _WORD_RE.findall(f"{ln.cls} {ln.desc} {ln.text}".lower()):
            if tok not in seen:
                seen.add(tok)
                tokens.append(tok)
    return _UiView(lines, tokens, {ln.bounds: ln for ln in lines})


def _rect_key(rect) -> str:
    x1, y1, x2, y2 = rect
    return f"[{x1},{y1}][{x2},{y2}]"


def _progress_bucket(pos: int, n: int) -> str:
    if pos < 0:
        return "none"
    if pos == n - 1:
        return "last"
    if pos == n - 2:
        return "penult"
    return "earlier"


@dataclass
class _Context:
    quoted: list
    words: set
    view: _UiView
    any_visible_match: bool
    progress: str


def _context(obs: Observation, instruction: str) -> _Context:
    view = _ui_view(obs.compressed_ui)
    quoted = [q.lower() for q in _QUOTED_RE.findall(instruction)]
    words = set(_WORD_RE.findall(instruction.lower()))
    qset = set(quoted)
    any_match = any("clickable" in ln.flags and ln.text.lower() in qset for ln in view.lines if ln.text)
    # progress: the furthest instruction target shown as a title or typed text
    pos = -1
    for ln in view.lines:
        passive = "clickable" not in ln.flags or ln.cls == "EditText"
        if passive and ln.text:
            t = ln.text.lower()
            for i, q in enumerate(quoted):
                if q == t and i > pos:
                    pos = i
    return _Context(quoted, words, view, any_match, _progress_bucket(pos, len(quoted)))


def _candidate_keys(ctx: _Context, cand: ActionCommand, k: int) -> list[str]:
    kind = cand.kind
    keys = [f"kind:{kind}"]
    cand_tokens = [kind.lower()]
    if kind in ("Tap", "LongPress") and cand.element is not None:
        line = ctx.view.by_bounds.get(_rect_key(cand.element))
        label = line.text.lower() if line else ""
        desc = line.desc.lower() if line else ""
        if label and label in ctx.quoted:
            keys.append(f"{kind}|target:{_progress_bucket(ctx.quoted.index(label), len(ctx.quoted))}")
        else:
            keys.append(f"{kind}|target:none")
        keys.append(f"{kind}|hint:{bool(desc) and desc in ctx.words}")
        if line is not None:
            cand_tokens += [line.cls.lower()] + _WORD_RE.findall(f"{desc} {label}")
    elif kind == "Type":
        text = (cand.text or "").lower()
        keys.append(f"Type|quoted:{text in ctx.quoted}")
        cand_tokens += _WORD_RE.findall(text)
    elif kind == "Swipe":
        keys.append(f"Swipe|{cand.direction}|visible:{ctx.any_visible_match}")
    elif kind == "Finish":
        keys.append(f"Finish|progress:{ctx.progress}")
    else:
        keys.append(f"{kind}|visible:{ctx.any_visible_match}")
    keys.append(f"{kind}|progress:{ctx.progress}")
    for ct in cand_tokens:
        for ut in ctx.view.tokens:
            if len(keys) >= k:
                break
            keys.append(f"x:{ct}|{ut}")
    serialized = serialize_action(cand)
    j = 0
    while len(keys) < k:
        keys.append(f"pad:{j}|{serialized}")
        j += 1
    return keys[:k]


def feature_keys(obs: Observation, cand: ActionCommand, instruction: str = "", k: int = DEFAULT_K) -> list[str]:
    return _candidate_keys(_context(obs, instruction), cand, k)


def featurize_all(
    obs: Observation,
    candidates: Sequence[ActionCommand],
    instruction: str = "",
    dim: int = DEFAULT_DIM,
    k: int = DEFAULT_K,
) -> np.ndarray:
    """Feature index matrix of shape (len(candidates), k)."""
    ctx = _context(obs, instruction)
    keys = [(SALT + key).encode() for cand in candidates for key in _candidate_keys(ctx, cand, k)]
    return kernels.hash_keys(keys, dim).reshape(len(candidates), k)


def featurize(
    obs: Observation, cand: ActionCommand, instruction: str = "", dim: int = DEFAULT_DIM, k: int = DEFAULT_K
) -> np.ndarray:
    return featurize_all(obs, [cand], instruction, dim, k)[0]


# ---------------------------------------------------------------------------
# distributions


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits)
    return shifted - math.log(np.exp(shifted).sum())


def distribution_from_features(
    weights: np.ndarray, feats: np.ndarray, temperature: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    if feats.shape[0] == 0:
        raise EmptyCandidateSet("no candidates")
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    logits = kernels.row_logits(weights, feats, 1.0 / temperature)
    if not np.all(np.isfinite(logits)):
        raise NonFiniteValue("non-finite action logits")
    logp = log_softmax(logits)
    return np.exp(logp), logp


def action_distribution(
    params: PolicyParams,
    obs: Observation,
    candidates: Sequence[ActionCommand],
    temperature: float = 1.0,
    instruction: str = "",
) -> tuple[np.ndarray, np.ndarray]:
    if not candidates:
        raise EmptyCandidateSet("no candidates")
    feats = featurize_all(obs, candidates, instruction, params.dim, params.k)
    return distribution_from_features(params.weights, feats, temperature)


def sample_index(probs: np.ndarray, u: float) -> int:
    """Inverse-CDF draw: the first index whose cumulative mass exceeds ``u``."""
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    return min(idx, len(probs) - 1)


def sample_action(dist: tuple[np.ndarray, np.ndarray], rng: np.random.Generator) -> tuple[int, float]:
    probs, logp = dist
    idx = sample_index(probs, float(rng.random()))
    return idx, float(logp[idx])


def greedy_action(dist: tuple[np.ndarray, np.ndarray]) -> tuple[int, float]:
    probs, logp = dist
    idx = int(np.argmax(probs))  # first maximal index
    return idx, float(logp[idx])


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError("distributions differ in length")
    support = p > 0
    if np.any(q[support] <= 0):
        raise SupportMismatch("q is zero where p is positive")
    return float(np.sum(p[support] * (np.log(p[support]) - np.log(q[support]))))


def entropy(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=np.float64)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(params: PolicyParams, path, seed: int = 0, config_hash: str = "") -> None:
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, FORMAT_VERSION, params.dim, params.k))
        fh.write(params.weights.astype("<f8").tobytes())
    sidecar = {"version": params.version, "seed": seed, "config_hash": config_hash}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, sort_keys=True) + "\n")


def load_checkpoint(path, expect_dim: Optional[int] = None, expect_k: Optional[int] = None) -> PolicyParams:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < HEADER.size:
        raise CheckpointError("file shorter than header")
    magic, version, dim, k = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported format version {version}")
    if len(data) != HEADER.size + 8 * dim:
        raise CheckpointError("payload size does not match header")
    if expect_dim is not None and dim != expect_dim:
        raise CheckpointError(f"dimension {dim} != expected {expect_dim}")
    if expect_k is not None and k != expect_k:
        raise CheckpointError(f"k {k} != expected {expect_k}")
    weights = np.frombuffer(data, dtype="<f8", offset=HEADER.size).astype(np.float64)
    sidecar = path.with_suffix(path.suffix + ".json")
    pversion = 0
    if sidecar.exists():
        pversion = int(json.loads(sidecar.read_text()).get("version", 0))
    try:
        return PolicyParams(weights, pversion, k)
    except ValueError as exc:
        raise CheckpointError(str(exc)) from None
