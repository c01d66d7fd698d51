"""Assemble the final resource TSVs and the per-run summary.

Rows are sorted by (qid number, language code) and fields are sanitized so
the TSVs stay machine-parseable; identical input always produces identical
bytes. One file per entity type plus a combined file; multi-type rows appear
in every matching per-type file but only once in the combined file.
"""

from __future__ import annotations

import gzip
import json
import os
import shutil
from collections import Counter
from typing import Iterable

from .records import TypedName, format_types, higher_level_language, qid_number

HEADER = "wikidata_id\teng\tlabel\tlanguage\ttype\n"
TYPE_FILES = {"PER": "per_names.tsv", "LOC": "loc_names.tsv", "ORG": "org_names.tsv"}
COMBINED_FILE = "names.tsv"
SUMMARY_FILE = "summary.json"


def drop_singleton_languages(
    names: Iterable[TypedName],
) -> tuple[list[TypedName], dict[str, int]]:
    """Remove languages represented by exactly one name.

    One name is not meaningful coverage of a language. Returns the kept rows
    and {language: 1} for each dropped language.
    """
    names = list(names)
    counts = Counter(name.language for name in names)
    dropped = {language: 1 for language, n in counts.items() if n == 1}
    kept = [name for name in names if name.language not in dropped]
    return kept, dropped


def _sanitize_field(text: str, counter: list[int]) -> str:
    if "\t" in text or "\n" in text or "\r" in text:
        counter[0] += 1
        return " ".join(text.replace("\t", " ").replace("\n", " ").replace("\r", " ").split())
    return text


def emit_resource(names: Iterable[TypedName], outdir) -> dict:
    """Write per-type and combined TSVs plus summary.json; returns the summary.

    Callers drop singleton languages first (the pipeline's emit stage does);
    this function only formats what it is given. The eng column carries the
    entity's English label from this same stream (empty when the entity has
    none); en rows therefore appear both as rows and as references.
    Language-code counts report both full codes and higher-level (first two
    letters) languages to avoid double-counting a language written in
    several scripts.
    """
    os.makedirs(outdir, exist_ok=True)
    names = list(names)
    english = {name.qid: name.label for name in names if name.language == "en"}
    names.sort(key=lambda n: (qid_number(n.qid), n.language))

    sanitized = [0]
    handles = {}
    try:
        for entity_type, filename in TYPE_FILES.items():
            handles[entity_type] = open(os.path.join(outdir, filename), "w", encoding="utf-8")
            handles[entity_type].write(HEADER)
        combined = open(os.path.join(outdir, COMBINED_FILE), "w", encoding="utf-8")
        combined.write(HEADER)

        entities = set()
        languages = set()
        per_type_counts = Counter()
        total = 0
        for name in names:
            label = _sanitize_field(name.label, sanitized)
            eng = _sanitize_field(english.get(name.qid, ""), sanitized)
            type_str = format_types(name.types)
            row = f"{name.qid}\t{eng}\t{label}\t{name.language}\t{type_str}\n"
            combined.write(row)
            for entity_type in name.types:
                handles[entity_type].write(row)
                per_type_counts[entity_type] += 1
            entities.add(name.qid)
            languages.add(name.language)
            total += 1
        combined.close()
    finally:
        for handle in handles.values():
            handle.close()

    summary = {
        "names": total,
        "entities": len(entities),
        "language_codes": len(languages),
        "higher_level_languages": len({higher_level_language(c) for c in languages}),
        "sanitized_fields": sanitized[0],
        "names_per_type": {t: per_type_counts.get(t, 0) for t in sorted(TYPE_FILES)},
    }
    with open(os.path.join(outdir, SUMMARY_FILE), "w", encoding="utf-8") as f:
        json.dump(summary, f, ensure_ascii=False, sort_keys=True, indent=2)
        f.write("\n")
    return summary


def write_gzip_copies(outdir) -> list[str]:
    """Release packaging: a .gz next to each resource TSV.

    The gzip mtime field is zeroed so the copies stay byte-deterministic.
    """
    written = []
    for name in sorted(os.listdir(outdir)):
        if not name.endswith(".tsv"):
            continue
        src = os.path.join(outdir, name)
        dst = src + ".gz"
        with open(src, "rb") as fin, open(dst, "wb") as raw:
            with gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as fout:
                shutil.copyfileobj(fin, fout)
        written.append(dst)
    return written
