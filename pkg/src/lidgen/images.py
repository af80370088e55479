"""Image download, normalization, and final manifest assembly."""

from __future__ import annotations

import io
import json
import logging
from pathlib import Path

from PIL import Image

from .config import PipelineConfig
from .documents import utc_now
from .errors import DecodeFailed, NotAnImage, PipelineError
from .fetch import PoliteFetcher

logger = logging.getLogger(__name__)

MANIFEST_SCHEMA_VERSION = 1

_MAGIC = (
    (b"\x89PNG\r\n\x1a\n", "png"),
    (b"\xff\xd8\xff", "jpeg"),
    (b"GIF87a", "gif"),
    (b"GIF89a", "gif"),
)


def sniff_image(data: bytes) -> str | None:
    for magic, fmt in _MAGIC:
        if data.startswith(magic):
            return fmt
    if data[:4] == b"RIFF" and data[8:12] == b"WEBP":
        return "webp"
    return None


def download_image(url: str, fetcher: PoliteFetcher) -> bytes:
    """Fetch raw image bytes; content is sniffed, not trusted by header."""
    result = fetcher.fetch(url)
    if sniff_image(result.body) is None:
        raise NotAnImage(f"{url} does not sniff as PNG/JPEG/WebP/GIF")
    return result.body


def normalize_image(data: bytes, max_side: int, fmt: str = "png") -> tuple[bytes, dict]:
    """Aspect-preserving downscale to max dimension ``max_side``; never upscales.

    Re-encoding uses fixed settings so normalization is byte-stable for PNG.
    """
    try:
        img = Image.open(io.BytesIO(data))
        img.load()  # force decode; PIL is lazy
        if getattr(img, "n_frames", 1) > 1:
            img.seek(0)
        img = img.convert("RGB")
    except Exception as exc:
        raise DecodeFailed(str(exc)) from exc

    w, h = img.size
    if max(w, h) > max_side:
        if w >= h:
            new_size = (max_side, max(1, round(h * max_side / w)))
        else:
            new_size = (max(1, round(w * max_side / h)), max_side)
        img = img.resize(new_size, Image.LANCZOS)

    buf = io.BytesIO()
    if fmt == "jpeg":
        img.save(buf, format="JPEG", quality=95, subsampling=0)
    else:
        img.save(buf, format="PNG", optimize=False, compress_level=6)
    meta = {"width": img.size[0], "height": img.size[1], "format": fmt}
    return buf.getvalue(), meta


def download_stage(
    records: list[dict], config: PipelineConfig, fetcher: PoliteFetcher | None = None
) -> tuple[list[dict], dict]:
    """Download and normalize one image per record (all with keep_all_images).

    Records whose every candidate image fails are dropped with a reason.
    """
    fetcher = fetcher or PoliteFetcher(
        config.politeness,
        config.shops[0].user_agent if config.shops else "lidgen",
        timeout_s=config.fetch_timeout_s,
        backoff_s=config.retry_backoff_ms / 1000.0,
    )
    out_dir = Path(config.output_dir)
    images_dir = out_dir / "images"
    images_dir.mkdir(parents=True, exist_ok=True)

    samples: list[dict] = []
    drops: dict[str, int] = {}

    def bump(reason: str) -> None:
        drops[reason] = drops.get(reason, 0) + 1

    ext = "jpg" if config.image_format == "jpeg" else "png"
    for rec in records:
        urls = rec.get("image_urls", [])
        if not config.keep_all_images:
            urls = urls[:1]
        stored = None
        reason = "image-missing"
        for url in urls:
            try:
                raw = download_image(url, fetcher)
                data, meta = normalize_image(raw, config.image_max_side, config.image_format)
            except NotAnImage:
                reason = "not-an-image"
                continue
            except DecodeFailed:
                reason = "decode-failed"
                continue
            except PipelineError as exc:
                logger.warning("image %s failed: %s", url, exc)
                reason = "image-missing"
                continue
            stored = (url, data, meta)
            break
        if stored is None:
            bump(reason)
            continue
        url, data, meta = stored
        image_path = f"images/{rec['record_id']}.{ext}"
        (out_dir / image_path).write_bytes(data)
        samples.append(
            {
                "sample_id": rec["record_id"],
                "record_id": rec["record_id"],
                "source_url": rec["source_url"],
                "shop_id": rec.get("shop_id", ""),
                "label": rec.get("label", ""),
                "fields": rec.get("fields", {}),
                "image_url": url,
                "image_path": image_path,
                "image_meta": meta,
            }
        )
    return samples, {"drops": drops}


def assemble_manifest(samples: list[dict], config: PipelineConfig, stats: dict) -> dict:
    """Build the final dataset manifest and write it atomically."""
    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "pipeline_version": "lidgen-0.1.0",
        "created_at": utc_now(),
        "image_max_side": config.image_max_side,
        "resize_policy": "max-side",
        "samples": [
            {
                "sample_id": s["sample_id"],
                "image_path": s["image_path"],
                "fields": s["fields"],
                "source": {
                    "shop_id": s["shop_id"],
                    "source_url": s["source_url"],
                    "image_url": s["image_url"],
                },
                "image_meta": s["image_meta"],
            }
            for s in samples
        ],
        "stats": stats,
    }
    out_path = Path(config.output_dir) / "manifest.json"
    tmp = out_path.with_suffix(".tmp")
    tmp.write_text(
        json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    tmp.replace(out_path)
    return manifest
