"""Core record types shared across pipeline stages, plus their JSONL forms.

Two row types flow through the pipeline: ``EntityRecord`` (one Wikidata item
with its labels and direct class memberships) and ``TypedName`` (one
entity/language/label row with its entity-type set). Both serialize to
canonical JSONL with sorted keys so stage outputs are byte-deterministic.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

QID_RE = re.compile(r"Q[1-9][0-9]*\Z")
LANGUAGE_CODE_RE = re.compile(r"[a-z0-9-]+\Z")

# High-level entity types in canonical serialization order.
TYPE_ORDER = ("LOC", "ORG", "PER")
_TYPE_RANK = {t: i for i, t in enumerate(TYPE_ORDER)}

# Zero-width and bidi control characters that sometimes leak into labels.
# They are passed through unmodified but counted so reports can flag them.
CONTROL_CHARS = frozenset(
    "\u200b\u200c\u200d\u200e\u200f"  # ZWSP, ZWNJ, ZWJ, LRM, RLM
    "\u202a\u202b\u202c\u202d\u202e"  # directional embedding/override
    "\u2066\u2067\u2068\u2069"        # directional isolates
    "\ufeff"                          # BOM / ZWNBSP
)


def is_valid_qid(qid: str) -> bool:
    return bool(QID_RE.match(qid))


def is_valid_language_code(code: str) -> bool:
    return bool(LANGUAGE_CODE_RE.match(code))


def qid_number(qid: str) -> int:
    """Numeric part of a qid, used for ordering output rows."""
    return int(qid[1:])


def higher_level_language(code: str) -> str:
    """First two characters of a Wikimedia language code (e.g. kk-arab -> kk)."""
    return code[:2]


def has_control_chars(text: str) -> bool:
    return any(c in CONTROL_CHARS for c in text)


@dataclass(frozen=True)
class EntityRecord:
    """One Wikidata item: identifier, per-language labels, direct P31/P279 targets."""

    qid: str
    labels: Mapping[str, str] = field(default_factory=dict)
    instance_of: frozenset[str] = frozenset()
    subclass_of: frozenset[str] = frozenset()

    def to_json_line(self) -> str:
        obj = {
            "qid": self.qid,
            "labels": {code: self.labels[code] for code in sorted(self.labels)},
            "instance_of": sorted(self.instance_of),
            "subclass_of": sorted(self.subclass_of),
        }
        return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "EntityRecord":
        return cls(
            qid=obj["qid"],
            labels=dict(obj.get("labels", {})),
            instance_of=frozenset(obj.get("instance_of", ())),
            subclass_of=frozenset(obj.get("subclass_of", ())),
        )


def sort_types(types: Iterable[str]) -> list[str]:
    return sorted(types, key=_TYPE_RANK.__getitem__)


def format_types(types: Iterable[str], sep: str = ",") -> str:
    """Canonical string for a type set: LOC before ORG before PER."""
    return sep.join(sort_types(types))


@dataclass(frozen=True)
class TypedName:
    """One (entity, language, label) row with its entity-type set."""

    qid: str
    language: str
    label: str
    types: frozenset[str]

    def to_json_line(self) -> str:
        obj = {
            "qid": self.qid,
            "language": self.language,
            "label": self.label,
            "types": sort_types(self.types),
        }
        return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "TypedName":
        return cls(
            qid=obj["qid"],
            language=obj["language"],
            label=obj["label"],
            types=frozenset(obj["types"]),
        )


def write_records_jsonl(records: Iterable[EntityRecord], path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(rec.to_json_line())
            f.write("\n")
            n += 1
    return n


def iter_records_jsonl(path) -> Iterator[EntityRecord]:
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                yield EntityRecord.from_json_obj(json.loads(line))


def write_names_jsonl(names: Iterable[TypedName], path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as f:
        for name in names:
            f.write(name.to_json_line())
            f.write("\n")
            n += 1
    return n


def iter_names_jsonl(path) -> Iterator[TypedName]:
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                yield TypedName.from_json_obj(json.loads(line))
