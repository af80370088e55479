"""Text pre- and post-filtering for crawled records and extracted fields.

All operations are pure and idempotent: applying any filter twice equals
applying it once, and no filter ever lengthens a string.
"""

from __future__ import annotations

import html
import re
import unicodedata
from dataclasses import dataclass

# characters preserved by sanitation besides letters, digits, and spaces
_ALLOWED_PUNCT = set(".,;:/()-&'\"")

_WS_RE = re.compile(r"\s+")

# units accepted directly attached to, or following, a numeric token
_UNITS = (
    "mm|cm|dm|m|km|um|in|inch|ft|kg|g|mg|t|l|ml|cl|v|kv|w|kw|a|ma|nm|bar|pa|kpa|mpa|"
    "hz|khz|rpm|psi|gal|oz|lb|lbs|pcs|pc|x"
)
_NUM = r"\d+(?:[.,]\d+)?"
# 40 | 40.5 | 40x40 | 40x40x10 | 40mm | 40x40mm | 3/8 | ø20 | 20° | 20°c | 5" | 5'
_DIMENSION_RE = re.compile(
    rf"^[ø~±<>]?(?:{_NUM}|{_NUM}/{_NUM})(?:\s*[x×]\s*{_NUM})*"
    rf"(?:(?:{_UNITS})[23²³]?|°c?|[\"'%])?$",
    re.IGNORECASE,
)
# metric thread designations: M8, M8x1.25, M10x1
_THREAD_RE = re.compile(rf"^m\d+(?:[x×]{_NUM})?$", re.IGNORECASE)
_UNIT_WORD_RE = re.compile(rf"^(?:{_UNITS})[23²³]?$|^°c?$", re.IGNORECASE)
_STRIP_EDGE = ".,;:/()\"'"


def sanitize_text(s: str) -> str:
    """Normalize scraped text: entities decoded, control chars and exotic
    symbols dropped, whitespace collapsed."""
    s = html.unescape(s)
    out = []
    for ch in s:
        if ch.isalnum() or ch in _ALLOWED_PUNCT:
            out.append(ch)
        elif ch.isspace() or unicodedata.category(ch).startswith("C"):
            out.append(" ")
        else:
            out.append(" ")
    return _WS_RE.sub(" ", "".join(out)).strip()


def _is_dimension_token(token: str) -> bool:
    core = token.strip(_STRIP_EDGE)
    if not core:
        return False
    return bool(_DIMENSION_RE.match(core) or _THREAD_RE.match(core))


def strip_dimensions(s: str) -> str:
    """Remove numeric tokens and number-unit compounds.

    Spelled-out numbers ("three-phase") are kept. A bare unit word directly
    following a removed numeric token is removed with it ("40 mm").
    """
    tokens = s.split()
    kept: list[str] = []
    prev_removed = False
    for token in tokens:
        core = token.strip(_STRIP_EDGE)
        if _is_dimension_token(token):
            prev_removed = True
            continue
        if prev_removed and core and _UNIT_WORD_RE.match(core):
            prev_removed = True
            continue
        prev_removed = False
        kept.append(token)
    return _WS_RE.sub(" ", " ".join(kept)).strip()


def remove_trade_names(text: str, trade_names: list[str]) -> tuple[str, int]:
    """Case-insensitive whole-word removal; returns (text, hit count)."""
    hits = 0
    for name in trade_names:
        if not name:
            continue
        pattern = re.compile(rf"\b{re.escape(name)}\b", re.IGNORECASE)
        text, n = pattern.subn(" ", text)
        hits += n
    return _WS_RE.sub(" ", text).strip(), hits


def strip_digits(s: str) -> str:
    s = re.sub(r"\d+", "", s)
    return _WS_RE.sub(" ", s).strip()


@dataclass
class FilterReport:
    dropped_duplicates: int = 0
    dropped_insufficient: int = 0
    trade_name_hits: int = 0
    dimension_tokens_removed: int = 0

    def to_dict(self) -> dict:
        return {
            "dropped_duplicates": self.dropped_duplicates,
            "dropped_insufficient": self.dropped_insufficient,
            "trade_name_hits": self.trade_name_hits,
            "dimension_tokens_removed": self.dimension_tokens_removed,
        }


def dedup_records(records: list[dict]) -> tuple[list[dict], int]:
    """Drop records with identical (label, info) or identical record_id.

    The kept representative is the one with the lowest source_url, making
    membership independent of input order.
    """
    ordered = sorted(records, key=lambda r: (r.get("source_url", ""), r.get("record_id", "")))
    seen_keys: set = set()
    seen_ids: set = set()
    kept: list[dict] = []
    for rec in ordered:
        key = (rec.get("label", ""), tuple(rec.get("info", [])))
        rid = rec.get("record_id")
        if key in seen_keys or rid in seen_ids:
            continue
        seen_keys.add(key)
        seen_ids.add(rid)
        kept.append(rec)
    return kept, len(records) - len(kept)


def drop_insufficient(
    records: list[dict], min_label_words: int = 2, min_info_words: int = 10
) -> tuple[list[dict], int]:
    """Drop records whose label or combined info falls below the thresholds
    (inclusive: exactly at the threshold is kept)."""
    kept = []
    for rec in records:
        label_words = len(rec.get("label", "").split())
        info_words = sum(len(s.split()) for s in rec.get("info", []))
        if label_words >= min_label_words and info_words >= min_info_words:
            kept.append(rec)
    return kept, len(records) - len(kept)


def prefilter_record(rec: dict, trade_names: list[str]) -> tuple[dict, int, int]:
    """Sanitize, de-brand, and de-dimension one crawled record.

    Returns (new record, trade-name hits, dimension tokens removed).
    """
    hits = 0
    removed = 0

    def clean(s: str) -> tuple[str, int, int]:
        s = sanitize_text(s)
        s, h = remove_trade_names(s, trade_names)
        before = len(s.split())
        s = strip_dimensions(s)
        return s, h, before - len(s.split())

    label, h, r = clean(rec.get("label", ""))
    hits += h
    removed += r
    info: list[str] = []
    for chunk in rec.get("info", []):
        chunk, h, r = clean(chunk)
        hits += h
        removed += r
        if chunk:
            info.append(chunk)
    new_rec = dict(rec)
    new_rec["label"] = label
    new_rec["info"] = info
    return new_rec, hits, removed


def prefilter_records(
    records: list[dict],
    trade_names: list[str],
    min_label_words: int = 2,
    min_info_words: int = 10,
) -> tuple[list[dict], FilterReport]:
    report = FilterReport()
    cleaned = []
    for rec in records:
        new_rec, hits, removed = prefilter_record(rec, trade_names)
        report.trade_name_hits += hits
        report.dimension_tokens_removed += removed
        cleaned.append(new_rec)
    deduped, report.dropped_duplicates = dedup_records(cleaned)
    kept, report.dropped_insufficient = drop_insufficient(
        deduped, min_label_words, min_info_words
    )
    return kept, report


def postfilter_fields(fields: dict) -> tuple[dict, list[str]]:
    """Lowercase, sanitize, and dimension/digit-strip all five fields.

    Returns (new fields, names of fields that became empty).
    """
    out = {}
    emptied = []
    for name, value in fields.items():
        value = sanitize_text(str(value)).lower()
        value = strip_dimensions(value)
        value = strip_digits(value)
        # digit stripping leaves artifacts like "()" behind; drop tokens that
        # carry no letters at all
        value = " ".join(t for t in value.split() if any(c.isalpha() for c in t))
        value = _WS_RE.sub(" ", value).strip()
        out[name] = value
        if not value:
            emptied.append(name)
    return out, emptied
