"""Stage documents: the JSON handoff object flowing between pipeline stages.

Each stage consumes its predecessor's document and emits a new one; documents
are immutable once written. One JSON file per stage lands in the output
directory as ``{stage}.json``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import SchemaMismatch

STAGES = ("crawl", "prefilter", "extract", "postfilter", "download")
SCHEMA_VERSION = 1

FIELD_NAMES = ("label_long", "label_short", "description", "material", "material_finish")


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def record_id_for(shop_id: str, source_url: str) -> str:
    """Stable dedup key: hash of (shop id, product URL)."""
    digest = hashlib.sha256(f"{shop_id}\n{source_url}".encode("utf-8")).hexdigest()
    return digest[:16]


@dataclass
class StageDocument:
    stage_name: str
    records: list[dict]
    provenance: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION
    created_at: str = field(default_factory=utc_now)

    def to_dict(self) -> dict:
        return {
            "stage_name": self.stage_name,
            "schema_version": self.schema_version,
            "created_at": self.created_at,
            "records": self.records,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "StageDocument":
        return cls(
            stage_name=raw["stage_name"],
            records=list(raw["records"]),
            provenance=dict(raw.get("provenance", {})),
            schema_version=int(raw.get("schema_version", -1)),
            created_at=raw.get("created_at", ""),
        )

    def save(self, path: str | Path) -> None:
        path = Path(path)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        tmp.replace(path)

    @classmethod
    def load(cls, path: str | Path) -> "StageDocument":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_dict(raw)


@dataclass
class Violation:
    record_id: str | None
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, record_id: str | None, message: str) -> None:
        self.violations.append(Violation(record_id, message))


def check_predecessor(doc: StageDocument | None, stage: str) -> None:
    """Raise SchemaMismatch unless ``doc`` is the valid predecessor of ``stage``."""
    if stage not in STAGES:
        raise SchemaMismatch(f"unknown stage {stage!r}")
    idx = STAGES.index(stage)
    if idx == 0:
        if doc is not None:
            raise SchemaMismatch("crawl stage takes no input document")
        return
    if doc is None:
        raise SchemaMismatch(f"stage {stage!r} requires a {STAGES[idx - 1]!r} document")
    if doc.schema_version != SCHEMA_VERSION:
        raise SchemaMismatch(
            f"schema version {doc.schema_version} unsupported (expected {SCHEMA_VERSION})"
        )
    if doc.stage_name != STAGES[idx - 1]:
        raise SchemaMismatch(
            f"stage {stage!r} requires a {STAGES[idx - 1]!r} document, got {doc.stage_name!r}"
        )


def validate_document(doc: StageDocument) -> ValidationReport:
    """List violated invariants per record; never raises."""
    report = ValidationReport()
    if doc.stage_name not in STAGES:
        report.add(None, f"unknown stage_name {doc.stage_name!r}")
        return report
    if doc.schema_version != SCHEMA_VERSION:
        report.add(None, f"unsupported schema_version {doc.schema_version}")
    if not doc.records and not doc.provenance.get("empty_run"):
        report.add(None, "records list is empty and run not marked empty")

    seen_ids: set[str] = set()
    needs_fields = doc.stage_name in ("extract", "postfilter")
    needs_image_urls = doc.stage_name in ("crawl", "prefilter")
    for rec in doc.records:
        rid = rec.get("record_id")
        if not rid:
            report.add(None, "record missing record_id")
            continue
        if rid in seen_ids:
            report.add(rid, "duplicate id")
        seen_ids.add(rid)
        if not rec.get("source_url"):
            report.add(rid, "missing source_url")
        if doc.stage_name != "download" and not str(rec.get("label", "")).strip():
            report.add(rid, "empty label")
        if needs_image_urls and not rec.get("image_urls"):
            report.add(rid, "no image_urls")
        if needs_fields:
            fields = rec.get("fields") or {}
            for name in FIELD_NAMES:
                if not str(fields.get(name, "")).strip():
                    report.add(rid, f"missing field {name}")
        if doc.stage_name == "download" and not rec.get("image_path"):
            report.add(rid, "missing image_path")
    return report
