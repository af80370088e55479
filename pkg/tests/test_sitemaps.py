"""Sitemap parser corpus conformance and hierarchical URL resolution."""

import gzip
import json
from pathlib import Path

import pytest

from lidgen.errors import UnknownRootElement, XmlMalformed
from lidgen.sitemaps import parse_sitemap, resolve_product_urls

CORPUS = Path(__file__).parent / "fixtures" / "sitemaps"
EXPECTED = json.loads((CORPUS / "expected.json").read_text())

ERRORS = {"XmlMalformed": XmlMalformed, "UnknownRootElement": UnknownRootElement}


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_corpus_conformance(name):
    spec = EXPECTED[name]
    data = (CORPUS / name).read_bytes()
    if "error" in spec:
        with pytest.raises(ERRORS[spec["error"]]):
            parse_sitemap(data)
        return
    tree = parse_sitemap(data)
    assert tree.kind == spec["kind"]
    if tree.kind == "urlset":
        assert [e.loc for e in tree.entries] == spec["locs"]
        assert not tree.children
        for loc, lastmod in spec.get("lastmods", {}).items():
            entry = next(e for e in tree.entries if e.loc == loc)
            assert entry.lastmod == lastmod
    else:
        assert [c.loc for c in tree.children] == spec["locs"]
        assert not tree.entries


def test_gzip_equals_uncompressed():
    plain = (CORPUS / "01_urlset_3.xml").read_bytes()
    t1 = parse_sitemap(plain)
    t2 = parse_sitemap(gzip.compress(plain))
    assert [e.loc for e in t1.entries] == [e.loc for e in t2.entries]


def test_entry_limit_is_warning_not_failure():
    body = (CORPUS / "15_hundred.xml").read_bytes()
    tree = parse_sitemap(body, max_entries=50)
    assert len(tree.entries) == 100
    assert tree.warnings


def _fake_fetch(pages: dict):
    def fetch(url: str) -> bytes:
        if url not in pages:
            raise RuntimeError(f"404 {url}")
        return pages[url]

    return fetch


def _urlset(*locs):
    urls = "".join(f"<url><loc>{u}</loc></url>" for u in locs)
    return f"<urlset>{urls}</urlset>".encode()


def test_resolution_filters_and_sorts():
    pages = {
        "https://x/i.xml": (
            b"<sitemapindex>"
            b"<sitemap><loc>https://x/products.xml</loc></sitemap>"
            b"<sitemap><loc>https://x/blog.xml</loc></sitemap>"
            b"</sitemapindex>"
        ),
        "https://x/products.xml": _urlset("https://x/product/b", "https://x/product/a"),
        "https://x/blog.xml": _urlset("https://x/blog/post"),
    }
    res = resolve_product_urls(
        ["https://x/i.xml"], _fake_fetch(pages), lambda u: "/product/" in u
    )
    assert res.urls == ["https://x/product/a", "https://x/product/b"]
    assert res.failures == []


def test_duplicate_loc_appears_once():
    pages = {
        "https://x/a.xml": _urlset("https://x/product/same"),
        "https://x/b.xml": _urlset("https://x/product/same"),
    }
    res = resolve_product_urls(
        ["https://x/a.xml", "https://x/b.xml"], _fake_fetch(pages), lambda u: True
    )
    assert res.urls == ["https://x/product/same"]


def test_all_fetches_fail_yields_empty_plus_failures():
    res = resolve_product_urls(
        ["https://x/a.xml", "https://x/b.xml"], _fake_fetch({}), lambda u: True
    )
    assert res.urls == []
    assert len(res.failures) == 2


def test_cycle_does_not_loop():
    pages = {
        "https://x/a.xml": b"<sitemapindex><sitemap><loc>https://x/b.xml</loc></sitemap></sitemapindex>",
        "https://x/b.xml": b"<sitemapindex><sitemap><loc>https://x/a.xml</loc></sitemap></sitemapindex>",
    }
    res = resolve_product_urls(["https://x/a.xml"], _fake_fetch(pages), lambda u: True)
    assert res.urls == []


def test_depth_cap():
    chain = {}
    for i in range(8):
        chain[f"https://x/l{i}.xml"] = (
            f"<sitemapindex><sitemap><loc>https://x/l{i+1}.xml</loc></sitemap></sitemapindex>".encode()
        )
    chain["https://x/l8.xml"] = _urlset("https://x/product/deep")
    res = resolve_product_urls(["https://x/l0.xml"], _fake_fetch(chain), lambda u: True, max_depth=4)
    assert res.urls == []
    assert any("depth" in w for w in res.warnings)
