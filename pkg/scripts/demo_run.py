#!/usr/bin/env python3
"""End-to-end demo against a self-contained local catalog.

Spins up a tiny product shop (robots.txt, sitemap index, product pages,
images) and a deterministic mock chat-completion endpoint, runs every
pipeline stage against them, and prints a summary of the resulting
manifest. No external network access required.

Usage:
    python scripts/demo_run.py [--output-dir DIR] [--min-delay-ms 100]
"""

import argparse
import io
import json
import re
import sys
import tempfile
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from PIL import Image

from lidgen.cli import main as lidgen_main

PRODUCTS = {
    "hinge": ("stainless steel door hinge",
              "corrosion resistant hinge for heavy industrial doors and gates"),
    "lever": ("adjustable clamping lever",
              "ergonomic clamping lever for quick fixture setups in workshops"),
    "bearing": ("ball bearing flanged unit",
                "self aligning ball bearing unit with cast iron flange housing"),
    "bracket": ("aluminium profile bracket",
                "angle bracket for structural aluminium profiles with fastening slots"),
    "knob": ("polyamide star knob",
             "glass fibre reinforced star knob with moulded steel bushing"),
    "rail": ("linear motion guide rail",
             "precision ground guide rail for linear motion carriages in automation"),
}

PAGE = """<html><body>
<h1 class="product-title">{label}</h1>
<div class="info"><p>{info} for machine building, 40x40 mm, M8 thread</p></div>
<img id="main-image" src="/img/{slug}.png">
</body></html>"""

_PROMPT_RE = re.compile(r"Label: (.*?) Text: (.*?)'", re.DOTALL)


def png(color):
    buf = io.BytesIO()
    Image.new("RGB", (640, 480), color).save(buf, format="PNG")
    return buf.getvalue()


def mock_completion(payload: dict) -> str:
    """Derive a plausible five-field answer from the prompt's label."""
    user = next(m["content"] for m in payload["messages"] if m["role"] == "user")
    label = _PROMPT_RE.search(user).group(1).strip()
    short = " ".join(label.split()[-2:])
    return (f"(1) {label} (2) {short} (3) a {label} for industrial use "
            f"(4) steel (5) matte finish")


class DemoServer:
    """One server hosting both the shop and the mock LLM endpoint."""

    def __init__(self):
        self.routes = {}
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_GET(self):
                body, ctype = outer.routes.get(self.path, (None, None))
                if body is None:
                    self.send_response(404)
                    self.end_headers()
                    return
                self.send_response(200)
                self.send_header("Content-Type", ctype)
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                payload = json.loads(self.rfile.read(length))
                content = mock_completion(payload)
                body = json.dumps(
                    {"choices": [{"message": {"role": "assistant", "content": content}}]}
                ).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        threading.Thread(target=self.httpd.serve_forever, daemon=True).start()

    @property
    def origin(self):
        host, port = self.httpd.server_address
        return f"http://{host}:{port}"

    def add(self, path, body, ctype="text/html; charset=utf-8"):
        if isinstance(body, str):
            body = body.encode()
        self.routes[path] = (body, ctype)

    def close(self):
        self.httpd.shutdown()
        self.httpd.server_close()


def populate(server: DemoServer) -> None:
    origin = server.origin
    server.add("/robots.txt",
               f"User-agent: *\nDisallow: /cart\nSitemap: {origin}/sitemap.xml\n",
               "text/plain")
    urls = []
    colors = [(180, 40, 40), (40, 180, 40), (40, 40, 180),
              (180, 180, 40), (40, 180, 180), (180, 40, 180)]
    for (slug, (label, info)), color in zip(PRODUCTS.items(), colors):
        server.add(f"/product/{slug}", PAGE.format(label=label, info=info, slug=slug))
        server.add(f"/img/{slug}.png", png(color), "image/png")
        urls.append(f"<url><loc>{origin}/product/{slug}</loc></url>")
    server.add("/sitemap.xml",
               "<urlset xmlns='http://www.sitemaps.org/schemas/sitemap/0.9'>"
               + "".join(urls) + "</urlset>",
               "application/xml")


def build_config(server: DemoServer, output_dir: str, min_delay_ms: int) -> dict:
    return {
        "shops": [{
            "shop_id": "demo-shop",
            "origin": server.origin,
            "product_url_filter": "/product/",
            "extraction_rules": {
                "label_selector": "h1.product-title",
                "info_selectors": [".info p"],
                "image_selectors": ["img#main-image"],
            },
        }],
        "trade_names": [],
        "llm_endpoint": {
            "url": f"{server.origin}/v1/chat/completions",
            "model": "demo-instruct",
            "timeout_s": 10,
        },
        "image_max_side": 256,
        "politeness": {"min_delay_ms": min_delay_ms, "max_concurrent": 4},
        "output_dir": output_dir,
        "retry_backoff_ms": 100,
        "fetch_timeout_s": 10,
    }


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--output-dir", default=None,
                        help="Dataset output directory (default: a temp dir).")
    parser.add_argument("--min-delay-ms", type=int, default=100)
    args = parser.parse_args(argv)

    out_dir = args.output_dir or tempfile.mkdtemp(prefix="lidgen-demo-")
    server = DemoServer()
    try:
        populate(server)
        config = build_config(server, out_dir, args.min_delay_ms)
        config_path = Path(out_dir) / "config.json"
        config_path.parent.mkdir(parents=True, exist_ok=True)
        config_path.write_text(json.dumps(config, indent=2))
        code = lidgen_main(["run-all", "--config", str(config_path)])
        if code != 0:
            return code
        manifest = json.loads((Path(out_dir) / "manifest.json").read_text())
        print(f"\nmanifest: {len(manifest['samples'])} samples in {out_dir}")
        for sample in manifest["samples"]:
            fields = sample["fields"]
            print(f"  {sample['image_path']}: {fields['label_long']} "
                  f"/ {fields['material']} / {fields['material_finish']}")
        return 0
    finally:
        server.close()


if __name__ == "__main__":
    sys.exit(run())
