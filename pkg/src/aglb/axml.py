"""Accessibility-tree compression for agent observations.

Pipeline: drop off-screen nodes, drop nodes carrying no functional or
semantic information (splicing their children into their place), then render
each survivor on one line::

    TextView;;Audio Recorder;[221,1095][858,1222]
    Button;Submit;;[0,0][100,50];clickable

Fields are ``class;content-desc;text;bounds`` followed by one ``;flag`` per
true functional flag. Nested nodes are indented two spaces per level.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence, Union

# Rendering order of the functional boolean attributes.
FUNCTIONAL_FLAGS = (
    "checkable",
    "checked",
    "clickable",
    "focusable",
    "scrollable",
    "long-clickable",
    "password",
    "selected",
)
ALL_FLAGS = FUNCTIONAL_FLAGS + ("enabled", "focused")

_BOUNDS_RE = re.compile(r"^\s*\[(-?\d+),(-?\d+)\]\s*\[(-?\d+),(-?\d+)\]\s*$")

Bounds = tuple[int, int, int, int]


@dataclass(frozen=True)
class UiNode:
    class_name: str = "android.view.View"
    text: str = ""
    content_desc: str = ""
    resource_id: str = ""
    package: str = ""
    index: int = 0
    bounds: Bounds = (0, 0, 0, 0)
    flags: frozenset = frozenset()
    children: tuple["UiNode", ...] = ()

    def __post_init__(self):
        x1, y1, x2, y2 = self.bounds
        if x1 > x2 or y1 > y2:
            raise ValueError(f"bad bounds {self.bounds}")
        unknown = set(self.flags) - set(ALL_FLAGS)
        if unknown:
            raise ValueError(f"unknown flags {sorted(unknown)}")
        if not isinstance(self.flags, frozenset):
            object.__setattr__(self, "flags", frozenset(self.flags))
        if not isinstance(self.children, tuple):
            object.__setattr__(self, "children", tuple(self.children))

    def walk(self) -> Iterable["UiNode"]:
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True)
class CompressedUi:
    lines: tuple[tuple[int, str], ...] = field(default_factory=tuple)

    def text(self) -> str:
        return "\n".join("  " * depth + rendering for depth, rendering in self.lines)

    def __len__(self) -> int:
        return len(self.lines)


Forest = list[UiNode]


def _inside(inner: Bounds, outer: Bounds) -> bool:
    return outer[0] <= inner[0] and outer[1] <= inner[1] and inner[2] <= outer[2] and inner[3] <= outer[3]


def filter_offscreen(root: Union[UiNode, Sequence[UiNode]], screen_w: int, screen_h: int) -> Forest:
    """Keep nodes lying inside the screen and inside their parent."""
    if screen_w <= 0 or screen_h <= 0:
        raise ValueError("screen dimensions must be positive")
    screen = (0, 0, screen_w, screen_h)

    def keep(node: UiNode, parent: Bounds) -> list[UiNode]:
        if not (_inside(node.bounds, screen) and _inside(node.bounds, parent)):
            return []
        kids = tuple(c for child in node.children for c in keep(child, node.bounds))
        return [replace(node, children=kids)]

    roots = [root] if isinstance(root, UiNode) else list(root)
    return [kept for r in roots for kept in keep(r, screen)]


def is_functional(node: UiNode) -> bool:
    return bool(node.text) or bool(node.content_desc) or any(f in node.flags for f in FUNCTIONAL_FLAGS)


def filter_redundant(forest: Union[UiNode, Sequence[UiNode]]) -> Forest:
    """Delete non-functional nodes, promoting their children in place."""
    roots = [forest] if isinstance(forest, UiNode) else list(forest)
    out: Forest = []
    for node in roots:
        kids = tuple(filter_redundant(node.children))
        if is_functional(node):
            out.append(replace(node, children=kids))
        else:
            out.extend(kids)
    return out


def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace(";", "\\;").replace("\n", "\\n")


def format_bounds(bounds: Bounds) -> str:
    x1, y1, x2, y2 = bounds
    return f"[{x1},{y1}][{x2},{y2}]"


def compress_node(node: UiNode) -> str:
    short = node.class_name.rsplit(".", 1)[-1]
    parts = [short, _escape(node.content_desc), _escape(node.text), format_bounds(node.bounds)]
    parts.extend(f for f in FUNCTIONAL_FLAGS if f in node.flags)
    return ";".join(parts)


def compress(
    root: Union[UiNode, Sequence[UiNode], None],
    screen_w: int,
    screen_h: int,
    keep_offscreen: bool = False,
) -> CompressedUi:
    if root is None:
        return CompressedUi()
    forest = [root] if isinstance(root, UiNode) else list(root)
    if not keep_offscreen:
        forest = filter_offscreen(forest, screen_w, screen_h)
    forest = filter_redundant(forest)
    lines: list[tuple[int, str]] = []

    def emit(node: UiNode, depth: int) -> None:
        lines.append((depth, compress_node(node)))
        for child in node.children:
            emit(child, depth + 1)

    for node in forest:
        emit(node, 0)
    return CompressedUi(tuple(lines))


# --------------------------------------------------------------------------
# XML dumps


def parse_bounds(text: str) -> Bounds:
    m = _BOUNDS_RE.match(text)
    if m is None:
        raise ValueError(f"malformed bounds {text!r}")
    return tuple(int(g) for g in m.groups())  # type: ignore[return-value]


def _from_element(el: ET.Element) -> UiNode:
    a = el.attrib
    flags = frozenset(f for f in ALL_FLAGS if a.get(f, "false").lower() == "true")
    bounds = parse_bounds(a["bounds"]) if "bounds" in a else (0, 0, 0, 0)
    try:
        index = int(a.get("index", "0"))
    except ValueError:
        index = 0
    return UiNode(
        class_name=a.get("class", ""),
        text=a.get("text", ""),
        content_desc=a.get("content-desc", ""),
        resource_id=a.get("resource-id", ""),
        package=a.get("package", ""),
        index=index,
        bounds=bounds,
        flags=flags,
        children=tuple(_from_element(c) for c in el if c.tag == "node"),
    )


def parse_hierarchy(xml_text: str) -> Forest:
    """Parse a uiautomator-style dump. Returns the top-level ``node`` elements."""
    root = ET.fromstring(xml_text)
    if root.tag == "node":
        return [_from_element(root)]
    return [_from_element(el) for el in root if el.tag == "node"]


def to_xml(forest: Sequence[UiNode]) -> str:
    """Inverse of :func:`parse_hierarchy`, used to emit test documents."""
    top = ET.Element("hierarchy", rotation="0")

    def build(parent: ET.Element, node: UiNode) -> None:
        attrs = {
            "index": str(node.index),
            "text": node.text,
            "resource-id": node.resource_id,
            "class": node.class_name,
            "package": node.package,
            "content-desc": node.content_desc,
        }
        for f in ALL_FLAGS:
            attrs[f] = "true" if f in node.flags else "false"
        attrs["bounds"] = format_bounds(node.bounds)
        el = ET.SubElement(parent, "node", attrs)
        for child in node.children:
            build(el, child)

    for node in forest:
        build(top, node)
    return ET.tostring(top, encoding="unicode")
