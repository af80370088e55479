"""Sequential stage orchestration over persisted stage documents."""

from __future__ import annotations

import logging
from pathlib import Path

from .config import PipelineConfig
from .crawler import crawl_stage
from .documents import STAGES, StageDocument, check_predecessor
from .errors import EmptyInput
from .images import assemble_manifest, download_stage
from .llm import extract_records
from .stats import corpus_stats
from .textfilter import postfilter_fields, prefilter_records

logger = logging.getLogger(__name__)


def _require_records(doc: StageDocument) -> None:
    if not doc.records and not doc.provenance.get("empty_run"):
        raise EmptyInput(f"{doc.stage_name} document has zero records")


def _run_crawl(doc, config: PipelineConfig, only_shop=None):
    records, prov = crawl_stage(config, only_shop=only_shop)
    if not records:
        prov["empty_run"] = True
    return records, prov


def _run_prefilter(doc: StageDocument, config: PipelineConfig):
    _require_records(doc)
    records, report = prefilter_records(
        doc.records,
        config.trade_names,
        min_label_words=config.min_label_words,
        min_info_words=config.min_info_words,
    )
    prov = {"filter_report": report.to_dict(), "drops": {}}
    if report.dropped_duplicates:
        prov["drops"]["duplicate"] = report.dropped_duplicates
    if report.dropped_insufficient:
        prov["drops"]["insufficient"] = report.dropped_insufficient
    return records, prov


def _run_extract(doc: StageDocument, config: PipelineConfig):
    _require_records(doc)
    records, drops = extract_records(doc.records, config.llm)
    return records, {"drops": drops}


def _run_postfilter(doc: StageDocument, config: PipelineConfig):
    _require_records(doc)
    kept: list[dict] = []
    drops: dict[str, int] = {}
    for rec in doc.records:
        fields, emptied = postfilter_fields(rec.get("fields", {}))
        if emptied:
            drops["field-emptied"] = drops.get("field-emptied", 0) + 1
            continue
        new_rec = dict(rec)
        new_rec["fields"] = fields
        kept.append(new_rec)
    return kept, {"drops": drops}


def _run_download(doc: StageDocument, config: PipelineConfig):
    _require_records(doc)
    samples, prov = download_stage(doc.records, config)
    stats = corpus_stats(samples)
    assemble_manifest(samples, config, stats)
    return samples, prov


_STAGE_FNS = {
    "crawl": _run_crawl,
    "prefilter": _run_prefilter,
    "extract": _run_extract,
    "postfilter": _run_postfilter,
    "download": _run_download,
}


def run_stage(
    doc: StageDocument | None,
    stage: str,
    config: PipelineConfig,
    only_shop: str | None = None,
) -> StageDocument:
    """Run one pipeline stage; the input document is never mutated."""
    check_predecessor(doc, stage)
    if stage == "crawl":
        records, prov = _run_crawl(doc, config, only_shop=only_shop)
    else:
        records, prov = _STAGE_FNS[stage](doc, config)
    # carry the drop ledger forward so the final document audits the full run
    if doc is not None and "drops" in prov:
        prior = dict(doc.provenance.get("drop_history", {}))
        prior[doc.stage_name] = doc.provenance.get("drops", {})
        prov["drop_history"] = prior
    logger.info("stage %s: %d records", stage, len(records))
    return StageDocument(stage_name=stage, records=records, provenance=prov)


def stage_path(output_dir: str | Path, stage: str) -> Path:
    return Path(output_dir) / f"{stage}.json"


def run_all(config: PipelineConfig, only_shop: str | None = None) -> StageDocument:
    """Run every stage in order, persisting one JSON document per stage."""
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    doc: StageDocument | None = None
    for stage in STAGES:
        doc = run_stage(doc, stage, config, only_shop=only_shop)
        doc.save(stage_path(out_dir, stage))
    assert doc is not None
    return doc
