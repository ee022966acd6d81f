"""Independent reference implementations used by several test modules."""

from functools import lru_cache
from itertools import product

from aglb.env import EnvState, TaskEnv


def _strip(state: EnvState) -> EnvState:
    return EnvState(state.screen_id, state.scroll_offset, state.focused_field, state.typed_text, state.prev_screen)


def shortest_by_sequences(env: TaskEnv, limit: int):
    """Shortest successful action sequence, searching sequence space with the
    public ``step`` API (depth-limited, memoized on the observable state and
    remaining budget). Returns None when nothing within ``limit`` succeeds."""

    @lru_cache(maxsize=None)
    def solvable(state: EnvState, budget: int) -> bool:
        if budget == 0:
            return False
        for action in env.candidates(state):
            res = env.step(state, action)
            if res.reward == 1:
                return True
            if not res.done and solvable(_strip(res.state), budget - 1):
                return True
        return False

    start = _strip(env.reset())
    for length in range(1, limit + 1):
        if solvable(start, length):
            return length
    return None


def shortest_by_enumeration(env: TaskEnv, limit: int):
    """Plain enumeration of every action sequence of each length (no memo)."""

    def run(seq_len: int) -> bool:
        stack = [(env.reset(), 0)]
        while stack:
            state, depth = stack.pop()
            for action in env.candidates(state):
                res = env.step(state, action)
                if res.reward == 1 and depth + 1 == seq_len:
                    return True
                if not res.done and depth + 1 < seq_len:
                    stack.append((res.state, depth + 1))
        return False

    for length in range(1, limit + 1):
        if run(length):
            return length
    return None
