"""Shared fixture builders for dump lines, claims and typed names."""

from __future__ import annotations

import gzip
import json

import pytest

from wdnames.records import TypedName
from wdnames.reorder import TableRomanizer, load_romanization_tables


def claim(target_qid: str, rank: str = "normal", snaktype: str = "value") -> dict:
    """One statement in the official dump shape."""
    snak = {"snaktype": snaktype}
    if snaktype == "value":
        snak["datavalue"] = {"value": {"id": target_qid, "entity-type": "item"}, "type": "wikibase-entityid"}
    return {"mainsnak": snak, "type": "statement", "rank": rank}


def dump_entity(qid: str, labels: dict | None = None, p31=(), p279=(), entity_type: str = "item") -> dict:
    return {
        "id": qid,
        "type": entity_type,
        "labels": {code: {"language": code, "value": text} for code, text in (labels or {}).items()},
        "claims": {
            **({"P31": [claim(t) for t in p31]} if p31 else {}),
            **({"P279": [claim(t) for t in p279]} if p279 else {}),
        },
    }


def dump_lines(entities, framing: str = "array") -> list[str]:
    """Serialize entities with the official array framing or as plain JSONL."""
    body = [json.dumps(e, ensure_ascii=False) for e in entities]
    if framing == "array":
        return ["[\n"] + [line + ",\n" for line in body[:-1]] + [line + "\n" for line in body[-1:]] + ["]\n"]
    return [line + "\n" for line in body]


def write_dump(path, entities, framing: str = "array", compress: str = "") -> None:
    text = "".join(dump_lines(entities, framing))
    if compress == "gzip":
        with gzip.open(path, "wt", encoding="utf-8") as f:
            f.write(text)
    elif compress == "bz2":
        import bz2

        with bz2.open(path, "wt", encoding="utf-8") as f:
            f.write(text)
    else:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)


def typed(qid: str, language: str, label: str, types=("PER",)) -> TypedName:
    return TypedName(qid=qid, language=language, label=label, types=frozenset(types))


@pytest.fixture(scope="session")
def romanizer():
    return TableRomanizer(load_romanization_tables())
