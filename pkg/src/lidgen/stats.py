"""Corpus statistics: unique-label counts and top-k word occurrences."""

from __future__ import annotations

from collections import Counter

from .documents import FIELD_NAMES

# articles and common prepositions excluded from word counting; hyphenated
# words count as a single token
STOPWORDS = frozenset(
    {
        "a", "an", "the",
        "of", "for", "with", "without", "to", "in", "on", "at", "by",
        "from", "as", "per", "and", "or",
    }
)


def unique_label_counts(manifest: dict) -> dict[str, int]:
    """Exact-string uniqueness per field over all samples."""
    seen: dict[str, set[str]] = {name: set() for name in FIELD_NAMES}
    for sample in manifest.get("samples", []):
        fields = sample.get("fields", {})
        for name in FIELD_NAMES:
            if name in fields:
                seen[name].add(fields[name])
    return {name: len(values) for name, values in seen.items()}


def word_occurrences(
    manifest: dict,
    field: str,
    stopwords: frozenset[str] = STOPWORDS,
    top: int | None = None,
) -> list[tuple[str, int]]:
    """Whitespace-tokenized word counts for one field, stopwords excluded.

    Sorted by count descending, then word ascending; deterministic for any
    sample order.
    """
    counter: Counter[str] = Counter()
    for sample in manifest.get("samples", []):
        value = sample.get("fields", {}).get(field, "")
        for token in value.split():
            if token not in stopwords:
                counter[token] += 1
    ranked = sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:top] if top is not None else ranked


def corpus_stats(manifest_samples: list[dict], top: int = 40) -> dict:
    """Stats block embedded in the manifest."""
    manifest = {"samples": manifest_samples}
    return {
        "sample_count": len(manifest_samples),
        "unique_counts": unique_label_counts(manifest),
        "word_occurrences": {
            name: [[w, c] for w, c in word_occurrences(manifest, name, top=top)]
            for name in FIELD_NAMES
        },
    }
