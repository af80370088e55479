"""Tiny DOM and CSS-selector subset over the stdlib HTML parser.

Supports what per-shop extraction rules need: type, ``.class``, ``#id``,
``[attr]`` / ``[attr=value]`` simple selectors, compounds thereof, and the
descendant (space) and child (``>``) combinators. Anything fancier belongs
in a real selector engine; catalog pages have not needed one.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from html.parser import HTMLParser

VOID_TAGS = {
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "param", "source", "track", "wbr",
}


@dataclass
class Node:
    tag: str
    attrs: dict[str, str] = field(default_factory=dict)
    children: list["Node"] = field(default_factory=list)
    parent: "Node | None" = None
    _text_parts: list[str] = field(default_factory=list)

    def classes(self) -> set[str]:
        return set(self.attrs.get("class", "").split())

    def iter(self):
        yield self
        for child in self.children:
            yield from child.iter()

    def text(self) -> str:
        """Concatenated descendant text with whitespace collapsed."""
        parts: list[str] = []

        def walk(node: Node) -> None:
            parts.extend(node._text_parts)
            for child in node.children:
                walk(child)

        walk(self)
        return re.sub(r"\s+", " ", " ".join(parts)).strip()


class _TreeBuilder(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.root = Node(tag="[document]")
        self.stack = [self.root]

    def handle_starttag(self, tag, attrs):
        node = Node(tag=tag.lower(), attrs={k: (v or "") for k, v in attrs}, parent=self.stack[-1])
        self.stack[-1].children.append(node)
        if tag.lower() not in VOID_TAGS:
            self.stack.append(node)

    def handle_startendtag(self, tag, attrs):
        node = Node(tag=tag.lower(), attrs={k: (v or "") for k, v in attrs}, parent=self.stack[-1])
        self.stack[-1].children.append(node)

    def handle_endtag(self, tag):
        tag = tag.lower()
        # pop to the nearest matching open tag; ignore stray closers
        for i in range(len(self.stack) - 1, 0, -1):
            if self.stack[i].tag == tag:
                del self.stack[i:]
                return

    def handle_data(self, data):
        if data:
            self.stack[-1]._text_parts.append(data)


def parse_html(html: bytes | str) -> Node:
    if isinstance(html, bytes):
        html = html.decode("utf-8", errors="replace")
    builder = _TreeBuilder()
    builder.feed(html)
    builder.close()
    return builder.root


_SIMPLE_RE = re.compile(
    r"(?P<tag>[a-zA-Z][\w-]*|\*)?"
    r"(?P<rest>(?:[.#][\w-]+|\[[^\]]+\])*)$"
)
_PART_RE = re.compile(r"([.#])([\w-]+)|\[([^\]=]+)(=([^\]]*))?\]")


@dataclass
class _Simple:
    tag: str | None = None
    ids: list[str] = field(default_factory=list)
    classes: list[str] = field(default_factory=list)
    attrs: list[tuple[str, str | None]] = field(default_factory=list)

    def matches(self, node: Node) -> bool:
        if node.tag == "[document]":
            return False
        if self.tag and self.tag != "*" and node.tag != self.tag:
            return False
        if any(node.attrs.get("id") != i for i in self.ids):
            return False
        if not set(self.classes) <= node.classes():
            return False
        for name, value in self.attrs:
            if name not in node.attrs:
                return False
            if value is not None and node.attrs[name] != value.strip("\"'"):
                return False
        return True


def _parse_simple(token: str) -> _Simple:
    m = _SIMPLE_RE.match(token)
    if not m:
        raise ValueError(f"unsupported selector token {token!r}")
    simple = _Simple(tag=(m.group("tag") or "").lower() or None)
    for kind, name, attr, eq, value in _PART_RE.findall(m.group("rest") or ""):
        if kind == ".":
            simple.classes.append(name)
        elif kind == "#":
            simple.ids.append(name)
        else:
            simple.attrs.append((attr.strip(), value if eq else None))
    return simple


def _parse_selector(selector: str) -> list[tuple[str, _Simple]]:
    """Compile into [(combinator, simple)] with combinator in {' ', '>'}."""
    tokens = selector.replace(">", " > ").split()
    compiled: list[tuple[str, _Simple]] = []
    combinator = " "
    for token in tokens:
        if token == ">":
            combinator = ">"
            continue
        compiled.append((combinator, _parse_simple(token)))
        combinator = " "
    if not compiled:
        raise ValueError(f"empty selector {selector!r}")
    return compiled


def _matches_chain(node: Node, chain: list[tuple[str, _Simple]]) -> bool:
    combinator, simple = chain[-1]
    if not simple.matches(node):
        return False
    if len(chain) == 1:
        return True
    ancestor = node.parent
    if combinator == ">":
        return ancestor is not None and _matches_chain(ancestor, chain[:-1])
    while ancestor is not None:
        if _matches_chain(ancestor, chain[:-1]):
            return True
        ancestor = ancestor.parent
    return False


def select(root: Node, selector: str) -> list[Node]:
    """All nodes matching ``selector``, in document order."""
    chain = _parse_selector(selector)
    return [node for node in root.iter() if _matches_chain(node, chain)]


def select_one(root: Node, selector: str) -> Node | None:
    matches = select(root, selector)
    return matches[0] if matches else None
