"""Shared fixtures: a local catalog HTTP server and a scripted mock LLM."""

from __future__ import annotations

import io
import json
import re
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, HTTPServer, ThreadingHTTPServer

import pytest
from PIL import Image


@dataclass
class LoggedRequest:
    t: float  # monotonic receive time
    method: str
    path: str


@dataclass
class Route:
    """One servable path. ``statuses`` is consumed per request, last repeats."""

    body: bytes
    content_type: str = "text/html; charset=utf-8"
    statuses: list[int] = field(default_factory=lambda: [200])
    hits: int = 0


class FixtureServer:
    """In-process HTTP server with a request log and scriptable statuses.

    Single-threaded by default so the request log's arrival order and timing
    faithfully reflect client send order (the polite fetcher serializes
    same-host requests anyway). Pass ``threaded=True`` where genuinely
    concurrent handling matters, e.g. the mock LLM endpoint.
    """

    def __init__(self, threaded: bool = False):
        self.routes: dict[str, Route] = {}
        self.log: list[LoggedRequest] = []
        self._log_lock = threading.Lock()
        self.llm_handler = None  # optional callable(messages dict) -> response str

        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def _record(self):
                with server._log_lock:
                    server.log.append(
                        LoggedRequest(t=time.monotonic(), method=self.command, path=self.path)
                    )

            def do_GET(self):
                self._record()
                route = server.routes.get(self.path)
                if route is None:
                    self.send_response(404)
                    self.end_headers()
                    return
                status = route.statuses[min(route.hits, len(route.statuses) - 1)]
                route.hits += 1
                self.send_response(status)
                if status == 200:
                    self.send_header("Content-Type", route.content_type)
                    self.send_header("Content-Length", str(len(route.body)))
                    self.end_headers()
                    self.wfile.write(route.body)
                else:
                    self.end_headers()

            def do_POST(self):
                self._record()
                if self.path == "/v1/chat/completions" and server.llm_handler:
                    length = int(self.headers.get("Content-Length", 0))
                    payload = json.loads(self.rfile.read(length))
                    result = server.llm_handler(payload)
                    if isinstance(result, int):
                        self.send_response(result)
                        self.end_headers()
                        return
                    body = json.dumps(
                        {"choices": [{"message": {"role": "assistant", "content": result}}]}
                    ).encode()
                    self.send_response(200)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(body)))
                    self.end_headers()
                    self.wfile.write(body)
                    return
                self.send_response(404)
                self.end_headers()

        server_cls = ThreadingHTTPServer if threaded else HTTPServer
        self.httpd = server_cls(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self.thread.start()

    @property
    def origin(self) -> str:
        host, port = self.httpd.server_address
        return f"http://{host}:{port}"

    def add(self, path: str, body: bytes | str, content_type="text/html; charset=utf-8",
            statuses: list[int] | None = None):
        if isinstance(body, str):
            body = body.encode("utf-8")
        self.routes[path] = Route(body=body, content_type=content_type,
                                  statuses=statuses or [200])

    def requests_for_host(self) -> list[LoggedRequest]:
        with self._log_lock:
            return list(self.log)

    def close(self):
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture
def server():
    s = FixtureServer()
    yield s
    s.close()


@pytest.fixture
def llm_server():
    s = FixtureServer(threaded=True)
    s.llm_handler = scripted_llm
    yield s
    s.close()


def png_bytes(width: int, height: int, color=(200, 60, 60)) -> bytes:
    buf = io.BytesIO()
    Image.new("RGB", (width, height), color).save(buf, format="PNG")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# fixture catalog: 22 product pages served under /product/
#   p19, p20  duplicates of p01, p02 (same label+info, different URL)
#   p21       label-less page (skip: no-label)
#   p22       broken image (404 at download stage)
#   p17       too little info text (dropped as insufficient)
#   p16       label triggers the scripted LLM to return insufficient output
# /product/secret/s1, s2 are listed in the sitemap but robots-disallowed.
# ---------------------------------------------------------------------------

GOOD_PRODUCTS = {
    "p01": ("stainless steel door hinge", "corrosion resistant hinge for heavy industrial doors and gates, brushed finish"),
    "p02": ("adjustable clamping lever", "ergonomic clamping lever with ACME thread insert for quick fixture setups in workshops"),
    "p03": ("ball bearing flanged unit", "self aligning ball bearing unit with cast iron flange housing for conveyor shafts"),
    "p04": ("aluminium profile bracket", "angle bracket for structural aluminium profiles with fastening slots and anodized surface"),
    "p05": ("polyamide star knob", "glass fibre reinforced polyamide star knob with moulded steel bushing for clamping tasks"),
    "p06": ("linear motion guide rail", "precision ground guide rail for linear motion carriages in automation machinery and gantries"),
    "p07": ("brass hose coupling", "nickel plated brass coupling for pneumatic hoses with quick release sleeve mechanism"),
    "p08": ("rubber machine foot", "vibration damping machine foot with vulcanized rubber pad bonded to zinc plated base"),
    "p09": ("toggle latch fastener", "spring loaded toggle latch fastener for enclosures machine guards and transport cases"),
    "p10": ("steel eye bolt", "forged carbon steel eye bolt for lifting and lashing applications with drop forged eye"),
    "p11": ("cast iron handwheel", "spoked handwheel of grey cast iron with revolving handle for valve and spindle operation"),
    "p12": ("plastic cable gland", "polyamide cable gland with integrated strain relief seal for junction boxes and panels"),
    "p13": ("swivel castor wheel", "heavy duty swivel castor with polyurethane tread and double ball race for trolleys"),
    "p14": ("stainless gas spring", "stainless steel gas spring for hygienic areas with threaded end fittings and damped stroke"),
    "p15": ("scissor lift table", "hydraulic scissor lift table for ergonomic material handling in assembly and packing lines"),
    "p18": ("spring plunger pin", "ball nose spring plunger of hardened steel for indexing and positioning fixture plates"),
}

LLM_DISCARD_LABEL = "mystery widget assembly"


def product_page(label: str, info_sentence: str, img_path: str, extra_info: str | None = None) -> str:
    info2 = extra_info or "Dimensions: 40x40 mm, M8 thread, weight 2 kg &amp; height 120 mm"
    return f"""<html><head><title>shop</title></head><body>
<nav class="menu"><a href="/">home</a></nav>
<h1 class="product-title">{label}</h1>
<div class="info"><p>{info_sentence}</p><p>{info2}</p></div>
<div class="gallery"><img id="main-image" src="{img_path}"></div>
</body></html>"""


def build_fixture_shop(server: FixtureServer) -> dict:
    """Populate the server with the catalog; returns expectation numbers."""
    origin = server.origin
    server.add(
        "/robots.txt",
        "User-agent: *\n"
        "Disallow: /product/secret\n"
        "Disallow: /cart\n"
        f"Sitemap: {origin}/sitemap_index.xml\n",
        content_type="text/plain",
    )
    products_xml = ["<?xml version='1.0'?><urlset xmlns='http://www.sitemaps.org/schemas/sitemap/0.9'>"]
    pages: dict[str, str] = {}

    big = png_bytes(1200, 800, (40, 90, 160))
    small = png_bytes(300, 200, (90, 160, 40))
    for i, (slug, (label, info)) in enumerate(sorted(GOOD_PRODUCTS.items())):
        img = f"/img/{slug}.png"
        server.add(img, big if i % 2 == 0 else small, content_type="image/png")
        pages[f"/product/{slug}"] = product_page(label, info, img)
    # p16: scripted LLM returns insufficient output for this label
    server.add("/img/p16.png", small, content_type="image/png")
    pages["/product/p16"] = product_page(
        LLM_DISCARD_LABEL,
        "an unidentifiable widget assembly with unclear purpose and no stated material data at all",
        "/img/p16.png",
    )
    # p17: info below the 10-word threshold
    server.add("/img/p17.png", small, content_type="image/png")
    pages["/product/p17"] = product_page(
        "tiny spacer ring", "just a spacer", "/img/p17.png", extra_info="40 mm"
    )
    # p19/p20: duplicates of p01/p02 under different URLs
    pages["/product/p19"] = pages["/product/p01"]
    pages["/product/p20"] = pages["/product/p02"]
    # p21: no label element
    server.add("/img/p21.png", small, content_type="image/png")
    pages["/product/p21"] = """<html><body>
<div class="info"><p>page without any product title present here at all</p></div>
<img id="main-image" src="/img/p21.png"></body></html>"""
    # p22: image URL 404s
    pages["/product/p22"] = product_page(
        "broken image widget",
        "a perfectly described product whose image download will fail during the final stage",
        "/img/missing.png",
    )

    for path, html in pages.items():
        server.add(path, html)
        products_xml.append(f"<url><loc>{origin}{path}</loc></url>")
    for secret in ("s1", "s2"):
        products_xml.append(f"<url><loc>{origin}/product/secret/{secret}</loc></url>")
    products_xml.append("</urlset>")
    server.add("/products.xml", "".join(products_xml), content_type="application/xml")
    server.add(
        "/blog.xml",
        f"<urlset xmlns='http://www.sitemaps.org/schemas/sitemap/0.9'>"
        f"<url><loc>{origin}/blog/post-1</loc></url></urlset>",
        content_type="application/xml",
    )
    server.add(
        "/sitemap_index.xml",
        f"<sitemapindex xmlns='http://www.sitemaps.org/schemas/sitemap/0.9'>"
        f"<sitemap><loc>{origin}/products.xml</loc></sitemap>"
        f"<sitemap><loc>{origin}/blog.xml</loc></sitemap></sitemapindex>",
        content_type="application/xml",
    )
    return {
        "sitemap_product_urls": 24,
        "crawl_records": 21,
        "crawl_drops": {"robots": 2, "no-label": 1},
        "prefilter_records": 18,
        "prefilter_drops": {"duplicate": 2, "insufficient": 1},
        "extract_records": 17,
        "extract_drops": {"discard-missing-field": 1},
        "postfilter_records": 17,
        "download_samples": 16,
        "download_drops": {"image-missing": 1},
    }


_LLM_USER_RE = re.compile(r"Label: (.*?) Text: (.*?)'", re.DOTALL)

MATERIAL_WORDS = {
    "steel": "stainless steel", "aluminium": "anodized aluminium", "brass": "brass",
    "polyamide": "polyamide", "plastic": "polyamide", "rubber": "rubber", "iron": "cast iron",
}


def scripted_llm(payload: dict):
    """Deterministic mock completion derived from the prompt's label."""
    user = next(m["content"] for m in payload["messages"] if m["role"] == "user")
    m = _LLM_USER_RE.search(user)
    label = m.group(1).strip() if m else ""
    if "mystery" in label:
        # insufficient output: marker (4) missing
        return f"(1) {label} (2) {label} (3) an unclear product (5) unknown"
    words = label.split()
    short = " ".join(words[-2:]) if len(words) >= 2 else label
    material = "steel"
    for key, value in MATERIAL_WORDS.items():
        if key in label:
            material = value
            break
    return (
        f"(1) {label} "
        f"(2) {short} "
        f"(3) a {label} for industrial use "
        f"(4) {material} "
        f"(5) matte finish"
    )


@pytest.fixture
def fixture_catalog(server, llm_server):
    expectations = build_fixture_shop(server)
    return server, llm_server, expectations


def make_config_dict(shop_server: FixtureServer, llm: FixtureServer, output_dir: str,
                     min_delay_ms: int = 100) -> dict:
    return {
        "shops": [
            {
                "shop_id": "fixture-shop",
                "origin": shop_server.origin,
                "product_url_filter": "/product/",
                "extraction_rules": {
                    "label_selector": "h1.product-title",
                    "info_selectors": [".info p"],
                    "image_selectors": ["img#main-image"],
                },
            }
        ],
        "trade_names": ["acme"],
        "llm_endpoint": {
            "url": f"{llm.origin}/v1/chat/completions",
            "model": "mock-instruct",
            "temperature": 0.0,
            "timeout_s": 10,
        },
        "image_max_side": 256,
        "politeness": {"min_delay_ms": min_delay_ms, "max_concurrent": 4},
        "output_dir": output_dir,
        "retry_backoff_ms": 50,
        "fetch_timeout_s": 5,
    }
