from pathlib import Path

import pytest

from aglb.axml import (
    FUNCTIONAL_FLAGS,
    UiNode,
    compress,
    compress_node,
    filter_offscreen,
    filter_redundant,
    is_functional,
    parse_hierarchy,
    to_xml,
)

RECORDER_XML = (
    '<?xml version="1.0" encoding="UTF-8"?>\n'
    '<hierarchy rotation="0"><node index="0" text="Audio Recorder" resource-id="" '
    'class="android.widget.TextView" package="com.dimowner.audiorecorder" content-desc="" '
    'checkable="false" checked="false" clickable="false" enabled="true" focusable="false" '
    'focused="false" scrollable="false" long-clickable="false" password="false" '
    'selected="false" bounds="[221,1095][858,1222]" /></hierarchy>'
)


def recorder_node():
    return parse_hierarchy(RECORDER_XML)[0]


def test_reference_example_byte_exact():
    node = recorder_node()
    assert compress_node(node) == "TextView;;Audio Recorder;[221,1095][858,1222]"
    out = compress(node, 1080, 2400)
    assert out.lines == ((0, "TextView;;Audio Recorder;[221,1095][858,1222]"),)
    assert out.text().encode() == b"TextView;;Audio Recorder;[221,1095][858,1222]"


def test_render_examples():
    b = UiNode("android.widget.Button", content_desc="Submit", bounds=(0, 0, 100, 50), flags={"clickable"})
    assert compress_node(b) == "Button;Submit;;[0,0][100,50];clickable"
    v = UiNode("android.view.View", bounds=(0, 0, 10, 10), flags={"scrollable"})
    assert compress_node(v) == "View;;;[0,0][10,10];scrollable"


def test_flag_order_fixed():
    n = UiNode("X", bounds=(0, 0, 1, 1), flags=set(FUNCTIONAL_FLAGS) | {"enabled", "focused"})
    assert compress_node(n).split(";")[4:] == list(FUNCTIONAL_FLAGS)


def test_semicolons_escaped():
    n = UiNode("X", text="a;b", bounds=(0, 0, 1, 1))
    assert compress_node(n) == r"X;;a\;b;[0,0][1,1]"


def test_offscreen_examples():
    full = UiNode("V", text="x", bounds=(0, 0, 1080, 2400))
    below = UiNode("V", text="x", bounds=(0, 2400, 1080, 2600))
    assert filter_offscreen(full, 1080, 2400) == [full]
    assert filter_offscreen(below, 1080, 2400) == []
    child = UiNode("V", text="c", bounds=(10, 10, 50, 50))
    parent = UiNode("V", text="p", bounds=(100, 100, 500, 500), children=(child,))
    (kept,) = filter_offscreen(parent, 1080, 2400)
    assert kept.children == ()


def test_removed_parent_takes_descendants():
    inner = UiNode("V", text="in", bounds=(0, 2500, 10, 2510))
    outer = UiNode("V", text="out", bounds=(0, 2450, 100, 2600), children=(inner,))
    assert filter_offscreen(outer, 1080, 2400) == []


def test_functional_examples():
    assert is_functional(UiNode(flags={"clickable"}))
    assert is_functional(UiNode(text="Audio Recorder"))
    assert is_functional(UiNode(content_desc="icon"))
    assert not is_functional(UiNode(flags={"enabled", "focused"}))


def test_splice():
    btn = UiNode("android.widget.Button", text="Go", bounds=(0, 0, 10, 10), flags={"clickable"})
    frame = UiNode("android.widget.FrameLayout", bounds=(0, 0, 100, 100), children=(btn,))
    assert filter_redundant(frame) == [btn]
    assert filter_redundant([UiNode(), UiNode(flags={"enabled"})]) == []
    assert filter_redundant(btn) == [btn]


def test_keep_offscreen():
    node = UiNode("V", text="far", bounds=(0, 5000, 10, 5010))
    assert len(compress(node, 1080, 2400)) == 0
    assert compress(node, 1080, 2400, keep_offscreen=True).lines == ((0, "V;;far;[0,5000][10,5010]"),)


def test_empty():
    assert compress(None, 1080, 2400).lines == ()
    assert compress([], 1080, 2400).text() == ""


def test_indentation():
    leaf = UiNode("a.B", text="leaf", bounds=(0, 0, 5, 5))
    mid = UiNode("a.M", content_desc="mid", bounds=(0, 0, 10, 10), children=(leaf,))
    top = UiNode("a.T", bounds=(0, 0, 20, 20), children=(mid,))  # spliced out
    assert compress(top, 100, 100).text() == "M;mid;;[0,0][10,10]\n  B;;leaf;[0,0][5,5]"


def _brute_on_screen(node, w, h, parent=None):
    """Nodes that survive the screen filter, by an independent walk."""
    x1, y1, x2, y2 = node.bounds
    ok = 0 <= x1 and x2 <= w and 0 <= y1 and y2 <= h
    if parent is not None:
        px1, py1, px2, py2 = parent
        ok = ok and px1 <= x1 and x2 <= px2 and py1 <= y1 and y2 <= py2
    if not ok:
        return []
    out = [node]
    for c in node.children:
        out.extend(_brute_on_screen(c, w, h, node.bounds))
    return out


def _walk(forest):
    for n in forest:
        yield from n.walk()


def test_corpus_idempotent_and_exhaustive(tree_corpus):
    for tree in tree_corpus:
        off = filter_offscreen(tree, 1080, 2400)
        assert filter_offscreen(off, 1080, 2400) == off
        red = filter_redundant(off)
        assert filter_redundant(red) == red
        assert filter_redundant(filter_redundant(tree)) == filter_redundant(tree)
        # brute-force: survivors are exactly the functional on-screen nodes, in document order
        expected = [compress_node(n) for n in _brute_on_screen(tree, 1080, 2400) if is_functional(n)]
        got = [line for _, line in compress(tree, 1080, 2400).lines]
        assert got == expected
        assert all(is_functional(n) for n in _walk(red))


def test_corpus_depths_and_determinism(tree_corpus):
    for tree in tree_corpus[:50]:
        out = compress(tree, 1080, 2400)
        assert out == compress(tree, 1080, 2400)
        prev = -1
        for depth, _ in out.lines:
            assert depth <= prev + 1
            prev = depth
        for _, line in out.lines:
            assert "id/" not in line and "com.example" not in line


def test_xml_round_trip(tree_corpus):
    for tree in tree_corpus[:20]:
        assert parse_hierarchy(to_xml([tree])) == [tree]


def test_cli_file(tmp_path: Path):
    from aglb.cli import main

    p = tmp_path / "page.xml"
    p.write_text(RECORDER_XML)
    assert main(["compress-xml", "--in", str(p), "--width", "1080", "--height", "2400"]) == 0


def test_bad_dimensions():
    with pytest.raises(ValueError):
        filter_offscreen(UiNode(), 0, 10)
