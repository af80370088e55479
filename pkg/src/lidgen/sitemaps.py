"""XML sitemap parsing and hierarchical product-URL resolution."""

from __future__ import annotations

import gzip
import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Callable

from .errors import UnknownRootElement, XmlMalformed

logger = logging.getLogger(__name__)

# protocol limit per sitemap file; exceeding it is a warning, not a failure
MAX_ENTRIES = 50_000
MAX_DEPTH = 4


@dataclass
class SitemapEntry:
    loc: str
    lastmod: str | None = None


@dataclass
class SitemapTree:
    kind: str  # "index" | "urlset"
    loc: str | None = None
    entries: list[SitemapEntry] = field(default_factory=list)  # urlset only
    children: list["SitemapTree"] = field(default_factory=list)  # index only
    warnings: list[str] = field(default_factory=list)


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1].lower()


def parse_sitemap(xml: bytes, max_entries: int = MAX_ENTRIES) -> SitemapTree:
    """Parse a fetched sitemap body into a one-level tree.

    Gzip-compressed bodies are detected by magic bytes and decompressed.
    Index children are recorded as unfetched stubs carrying only their loc.
    """
    if xml[:2] == b"\x1f\x8b":
        try:
            xml = gzip.decompress(xml)
        except OSError as exc:
            raise XmlMalformed(f"gzip body corrupt: {exc}") from exc
    try:
        root = ET.fromstring(xml)
    except ET.ParseError as exc:
        raise XmlMalformed(str(exc)) from exc

    kind = _local(root.tag)
    if kind == "urlset":
        tree = SitemapTree(kind="urlset")
        for child in root:
            if _local(child.tag) != "url":
                continue
            loc, lastmod = _loc_lastmod(child)
            if loc:
                tree.entries.append(SitemapEntry(loc=loc, lastmod=lastmod))
        if len(tree.entries) > max_entries:
            tree.warnings.append(
                f"urlset holds {len(tree.entries)} entries, over the {max_entries} limit"
            )
        return tree
    if kind == "sitemapindex":
        tree = SitemapTree(kind="index")
        for child in root:
            if _local(child.tag) != "sitemap":
                continue
            loc, _ = _loc_lastmod(child)
            if loc:
                tree.children.append(SitemapTree(kind="urlset", loc=loc))
        if len(tree.children) > max_entries:
            tree.warnings.append(
                f"index holds {len(tree.children)} entries, over the {max_entries} limit"
            )
        return tree
    raise UnknownRootElement(f"unexpected sitemap root <{kind}>")


def _loc_lastmod(node: ET.Element) -> tuple[str | None, str | None]:
    loc = None
    lastmod = None
    for sub in node:
        name = _local(sub.tag)
        if name == "loc" and sub.text:
            loc = sub.text.strip()
        elif name == "lastmod" and sub.text:
            lastmod = sub.text.strip()
    return loc, lastmod


@dataclass
class SitemapResolution:
    urls: list[str]
    failures: list[tuple[str, str]] = field(default_factory=list)  # (sitemap url, error)
    warnings: list[str] = field(default_factory=list)


def resolve_product_urls(
    root_sitemap_urls: list[str],
    fetch: Callable[[str], bytes],
    product_filter: Callable[[str], bool],
    max_depth: int = MAX_DEPTH,
) -> SitemapResolution:
    """Walk the sitemap hierarchy and collect matching product-page URLs.

    Per-sitemap fetch or parse failures are recorded, not raised; the result
    is whatever resolved, deduplicated and lexicographically sorted.
    """
    found: set[str] = set()
    failures: list[tuple[str, str]] = []
    warnings: list[str] = []
    visited: set[str] = set()

    queue: list[tuple[str, int]] = [(u, 0) for u in root_sitemap_urls]
    while queue:
        url, depth = queue.pop(0)
        if url in visited:
            continue
        visited.add(url)
        if depth > max_depth:
            warnings.append(f"{url}: recursion depth {depth} over cap {max_depth}, skipped")
            continue
        try:
            body = fetch(url)
            tree = parse_sitemap(body)
        except Exception as exc:  # fetch or parse failure is per-sitemap, non-fatal
            failures.append((url, str(exc)))
            logger.warning("sitemap %s failed: %s", url, exc)
            continue
        warnings.extend(tree.warnings)
        if tree.kind == "index":
            for child in tree.children:
                if child.loc:
                    queue.append((child.loc, depth + 1))
        else:
            for entry in tree.entries:
                if product_filter(entry.loc):
                    found.add(entry.loc)

    return SitemapResolution(urls=sorted(found), failures=failures, warnings=warnings)
