import numpy as np
import pytest

from aglb.axml import ALL_FLAGS, UiNode

CLASSES = (
    "android.widget.FrameLayout",
    "android.widget.LinearLayout",
    "android.widget.TextView",
    "android.widget.Button",
    "android.widget.EditText",
    "android.view.View",
)


def random_tree(rng: np.random.Generator, depth: int = 0, parent=(0, 0, 1080, 2400)) -> UiNode:
    """A random hierarchy where some nodes spill outside the screen or parent."""
    px1, py1, px2, py2 = parent
    if rng.random() < 0.15:
        # deliberately out of bounds
        x1 = int(rng.integers(-200, 1200))
        y1 = int(rng.integers(-200, 2600))
    else:
        x1 = int(rng.integers(px1, max(px1 + 1, px2)))
        y1 = int(rng.integers(py1, max(py1 + 1, py2)))
    x2 = x1 + int(rng.integers(0, max(1, px2 - x1 + 1))) if x1 <= px2 else x1 + int(rng.integers(0, 300))
    y2 = y1 + int(rng.integers(0, max(1, py2 - y1 + 1))) if y1 <= py2 else y1 + int(rng.integers(0, 300))
    flags = frozenset(f for f in ALL_FLAGS if rng.random() < 0.12)
    words = ["", "", "", "OK", "Audio Recorder", "a;b", "Settings"]
    n_children = int(rng.integers(0, 4)) if depth < 4 else 0
    node = UiNode(
        class_name=str(rng.choice(CLASSES)),
        text=str(rng.choice(words)),
        content_desc=str(rng.choice(words)),
        resource_id=f"id/{int(rng.integers(1000))}",
        package="com.example",
        index=int(rng.integers(5)),
        bounds=(x1, y1, x2, y2),
        flags=flags,
    )
    children = tuple(random_tree(rng, depth + 1, node.bounds) for _ in range(n_children))
    return UiNode(**{**node.__dict__, "children": children})


@pytest.fixture
def tree_corpus():
    rng = np.random.Generator(np.random.Philox(key=2024))
    return [random_tree(rng) for _ in range(200)]


# -- acceptance verdicts -----------------------------------------------------

_VERDICTS: dict[int, str] = {}


@pytest.fixture(scope="session")
def verdicts():
    """``verdicts[n] = line`` records the PASS/FAIL line of criterion ``n``."""
    return _VERDICTS


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_VERDICTS):
        terminalreporter.write_line(_VERDICTS[n])
