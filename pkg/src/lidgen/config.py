"""Pipeline configuration: shops, politeness, LLM endpoint, filtering knobs.

The config file is a single declarative JSON document; ``load_config`` maps it
onto the dataclasses below and enforces the documented bounds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import urlparse

from .errors import ConfigError

DEFAULT_USER_AGENT = "lidgen/0.1 (+dataset pipeline)"


@dataclass(frozen=True)
class Politeness:
    min_delay_ms: int = 1000
    max_concurrent: int = 4


@dataclass(frozen=True)
class ExtractionRules:
    """Per-shop CSS selectors naming which page parts to yield."""

    label_selector: str
    info_selectors: list[str] = field(default_factory=list)
    image_selectors: list[str] = field(default_factory=list)

    def validate(self) -> None:
        if not self.label_selector.strip():
            raise ConfigError("label_selector must be non-empty")
        if not self.image_selectors:
            raise ConfigError("at least one image selector is required")


@dataclass(frozen=True)
class ShopSpec:
    shop_id: str
    origin: str
    product_url_filter: str  # regex matched against the full product URL
    rules: ExtractionRules
    user_agent: str = DEFAULT_USER_AGENT
    # Explicit sitemap URLs used when robots.txt is absent or lists none.
    sitemap_override: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class LlmEndpoint:
    url: str
    model: str
    temperature: float = 0.0
    max_concurrency: int = 2
    timeout_s: float = 60.0
    max_retries: int = 2
    # Rough token budget for one prompt; info text is truncated tail-first.
    token_budget: int = 1024


@dataclass(frozen=True)
class PipelineConfig:
    shops: list[ShopSpec]
    llm: LlmEndpoint
    trade_names: list[str] = field(default_factory=list)
    image_max_side: int = 512
    image_format: str = "png"  # "png" or "jpeg"
    keep_all_images: bool = False
    politeness: Politeness = field(default_factory=Politeness)
    output_dir: str = "out"
    min_label_words: int = 2
    min_info_words: int = 10
    retry_backoff_ms: int = 250
    fetch_timeout_s: float = 20.0

    def validate(self) -> None:
        if self.politeness.min_delay_ms < 0:
            raise ConfigError("politeness.min_delay_ms must be >= 0")
        if self.politeness.max_concurrent < 1:
            raise ConfigError("politeness.max_concurrent must be >= 1")
        if self.image_max_side < 224:
            raise ConfigError("image_max_side must be >= 224")
        if self.image_format not in ("png", "jpeg"):
            raise ConfigError("image_format must be 'png' or 'jpeg'")
        seen: set[str] = set()
        for shop in self.shops:
            if shop.shop_id in seen:
                raise ConfigError(f"duplicate shop_id {shop.shop_id!r}")
            seen.add(shop.shop_id)
            if not urlparse(shop.origin).netloc:
                raise ConfigError(f"shop {shop.shop_id!r}: origin is not an absolute URL")
            shop.rules.validate()


def _rules_from_dict(d: dict) -> ExtractionRules:
    return ExtractionRules(
        label_selector=d["label_selector"],
        info_selectors=list(d.get("info_selectors", [])),
        image_selectors=list(d.get("image_selectors", [])),
    )


def _shop_from_dict(d: dict) -> ShopSpec:
    return ShopSpec(
        shop_id=d["shop_id"],
        origin=d["origin"].rstrip("/"),
        product_url_filter=d.get("product_url_filter", ""),
        rules=_rules_from_dict(d["extraction_rules"]),
        user_agent=d.get("user_agent", DEFAULT_USER_AGENT),
        sitemap_override=list(d.get("sitemap_override", [])),
    )


def config_from_dict(raw: dict) -> PipelineConfig:
    try:
        llm_raw = raw["llm_endpoint"]
        llm = LlmEndpoint(
            url=llm_raw["url"],
            model=llm_raw["model"],
            temperature=float(llm_raw.get("temperature", 0.0)),
            max_concurrency=int(llm_raw.get("max_concurrency", 2)),
            timeout_s=float(llm_raw.get("timeout_s", 60.0)),
            max_retries=int(llm_raw.get("max_retries", 2)),
            token_budget=int(llm_raw.get("token_budget", 1024)),
        )
        pol_raw = raw.get("politeness", {})
        politeness = Politeness(
            min_delay_ms=int(pol_raw.get("min_delay_ms", 1000)),
            max_concurrent=int(pol_raw.get("max_concurrent", 4)),
        )
        cfg = PipelineConfig(
            shops=[_shop_from_dict(s) for s in raw["shops"]],
            llm=llm,
            trade_names=[t.lower() for t in raw.get("trade_names", [])],
            image_max_side=int(raw.get("image_max_side", 512)),
            image_format=raw.get("image_format", "png"),
            keep_all_images=bool(raw.get("keep_all_images", False)),
            politeness=politeness,
            output_dir=raw.get("output_dir", "out"),
            min_label_words=int(raw.get("min_label_words", 2)),
            min_info_words=int(raw.get("min_info_words", 10)),
            retry_backoff_ms=int(raw.get("retry_backoff_ms", 250)),
            fetch_timeout_s=float(raw.get("fetch_timeout_s", 20.0)),
        )
    except KeyError as exc:
        raise ConfigError(f"missing config key: {exc}") from exc
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> PipelineConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(raw)
