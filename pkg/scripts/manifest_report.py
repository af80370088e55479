#!/usr/bin/env python3
"""Print a plain-text report over a dataset manifest.

Shows the sample count, per-field unique-value counts, and the top-k word
occurrences for each text field (stopwords excluded).

Usage:
    python scripts/manifest_report.py MANIFEST [--top 15]
"""

import argparse
import json
import sys
from pathlib import Path

from lidgen.documents import FIELD_NAMES
from lidgen.stats import unique_label_counts, word_occurrences


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("manifest", type=Path)
    parser.add_argument("--top", type=int, default=15)
    args = parser.parse_args(argv)

    manifest = json.loads(args.manifest.read_text(encoding="utf-8"))
    samples = manifest.get("samples", [])
    print(f"samples: {len(samples)}")

    uniques = unique_label_counts(manifest)
    print("\nunique values per field:")
    for name in FIELD_NAMES:
        print(f"  {name:16s} {uniques[name]}")

    for name in FIELD_NAMES:
        ranked = word_occurrences(manifest, name, top=args.top)
        if not ranked:
            continue
        print(f"\ntop words in {name}:")
        for word, count in ranked:
            print(f"  {count:6d}  {word}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
