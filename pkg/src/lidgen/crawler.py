"""Catalog crawling: robots discovery, sitemap walk, page extraction."""

from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from urllib.parse import urljoin

from .config import PipelineConfig, ShopSpec
from .documents import record_id_for, utc_now
from .errors import FatalConfig, PipelineError
from .fetch import PoliteFetcher
from .htmlselect import parse_html, select
from .robots import RobotsPolicy, is_allowed, parse_robots
from .sitemaps import resolve_product_urls

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Skip:
    reason: str  # "no-label" | "no-image"


def extract_product(html: bytes, url: str, rules, shop_id: str = "") -> dict | Skip:
    """Apply a shop's selectors to one product page.

    Returns a raw record dict, or Skip when the page has no usable label or
    no image.
    """
    root = parse_html(html)

    label_nodes = select(root, rules.label_selector)
    label = label_nodes[0].text() if label_nodes else ""
    if not label.strip():
        return Skip("no-label")

    info: list[str] = []
    for selector in rules.info_selectors:
        for node in select(root, selector):
            text = node.text()
            if text:
                info.append(text)

    image_urls: list[str] = []
    for selector in rules.image_selectors:
        for node in select(root, selector):
            src = node.attrs.get("src") or node.attrs.get("data-src") or node.attrs.get("href")
            if not src:
                continue
            absolute = urljoin(url, src)
            if absolute not in image_urls:
                image_urls.append(absolute)
    if not image_urls:
        return Skip("no-image")

    return {
        "record_id": record_id_for(shop_id, url),
        "shop_id": shop_id,
        "source_url": url,
        "label": label.strip(),
        "info": info,
        "image_urls": image_urls,
        "fetched_at": utc_now(),
    }


def _fetch_robots(shop: ShopSpec, fetcher: PoliteFetcher) -> RobotsPolicy | None:
    robots_url = shop.origin + "/robots.txt"
    try:
        result = fetcher.fetch(robots_url)
    except PipelineError as exc:
        logger.warning("robots.txt for %s unavailable: %s", shop.shop_id, exc)
        return None
    text = result.body.decode("utf-8", errors="replace")
    return parse_robots(text, shop.user_agent, origin=shop.origin)


def crawl_catalog(
    shop: ShopSpec, config: PipelineConfig, fetcher: PoliteFetcher | None = None
) -> tuple[list[dict], dict]:
    """Crawl one shop: robots -> sitemaps -> product pages -> raw records.

    Record order is sorted by source_url, independent of network timing.
    Returns (records, per-shop provenance with drop counts).
    """
    fetcher = fetcher or PoliteFetcher(
        config.politeness,
        shop.user_agent,
        timeout_s=config.fetch_timeout_s,
        backoff_s=config.retry_backoff_ms / 1000.0,
    )

    robots = _fetch_robots(shop, fetcher)
    if robots is None:
        if not shop.sitemap_override:
            raise FatalConfig(
                f"shop {shop.shop_id!r}: robots.txt unreachable and no sitemap override"
            )
        robots = RobotsPolicy(origin=shop.origin)  # allow-all

    sitemap_urls = list(shop.sitemap_override) or robots.sitemap_urls
    if not sitemap_urls:
        raise FatalConfig(f"shop {shop.shop_id!r}: no sitemaps in robots.txt and no override")

    url_filter = re.compile(shop.product_url_filter) if shop.product_url_filter else None

    def matches(url: str) -> bool:
        return url_filter.search(url) is not None if url_filter else True

    resolution = resolve_product_urls(
        sitemap_urls,
        fetch=lambda u: fetcher.fetch(u, robots=robots).body,
        product_filter=matches,
    )

    drops: dict[str, int] = {}

    def bump(reason: str) -> None:
        drops[reason] = drops.get(reason, 0) + 1

    allowed_urls: list[str] = []
    for url in resolution.urls:
        if is_allowed(robots, url):
            allowed_urls.append(url)
        else:
            bump("robots")

    def crawl_one(url: str) -> dict | str:
        try:
            body = fetcher.fetch(url, robots=robots).body
        except PipelineError as exc:
            logger.warning("fetch failed for %s: %s", url, exc)
            return "fetch-error"
        result = extract_product(body, url, shop.rules, shop_id=shop.shop_id)
        if isinstance(result, Skip):
            return result.reason
        return result

    # concurrency is across hosts; the fetcher serializes per host
    with ThreadPoolExecutor(max_workers=config.politeness.max_concurrent) as pool:
        results = list(pool.map(crawl_one, allowed_urls))

    records: list[dict] = []
    for result in results:
        if isinstance(result, str):
            bump(result)
        else:
            records.append(result)
    records.sort(key=lambda r: r["source_url"])

    provenance = {
        "shop_id": shop.shop_id,
        "product_urls": len(resolution.urls),
        "sitemap_failures": resolution.failures,
        "sitemap_warnings": resolution.warnings,
        "drops": drops,
        "records": len(records),
    }
    return records, provenance


def crawl_stage(config: PipelineConfig, only_shop: str | None = None) -> tuple[list[dict], dict]:
    """Crawl every configured shop and merge results into one record list."""
    shops = [s for s in config.shops if only_shop is None or s.shop_id == only_shop]
    if only_shop is not None and not shops:
        raise FatalConfig(f"no shop with id {only_shop!r} in config")
    all_records: list[dict] = []
    shop_prov: list[dict] = []
    total_drops: dict[str, int] = {}
    for shop in shops:
        records, prov = crawl_catalog(shop, config)
        all_records.extend(records)
        shop_prov.append(prov)
        for reason, count in prov["drops"].items():
            total_drops[reason] = total_drops.get(reason, 0) + count
    all_records.sort(key=lambda r: (r["shop_id"], r["source_url"]))
    return all_records, {"shops": shop_prov, "drops": total_drops}
