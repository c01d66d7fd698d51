"""Stream Wikidata dumps (or simplified JSONL fixtures) into EntityRecords.

Accepts the official dump framing (a JSON array with one entity object per
line, lines terminated with ",") as well as plain JSONL, optionally gzip- or
bzip2-compressed. Lines are parsed lazily, one at a time, so memory stays
bounded by the largest single line regardless of dump size.

Label extraction follows the resource's rules: the "labels" field only (never
also-known-as aliases), surrounding whitespace trimmed, and only truthy
(non-deprecated) P31/P279 statement targets.
"""

from __future__ import annotations

import bz2
import gzip
import io
import json
import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from .records import (
    EntityRecord,
    has_control_chars,
    is_valid_language_code,
    is_valid_qid,
)

DEFAULT_ENDPOINT = "https://www.wikidata.org"
ENDPOINT_ENV_VAR = "WDNAMES_ENDPOINT"

_GZIP_MAGIC = b"\x1f\x8b"
_BZIP2_MAGIC = b"BZh"


class IngestError(Exception):
    """Fatal ingest problem (unreadable stream, bad fetch response)."""


class FetchError(IngestError):
    """HTTP fetch failure; carries the status code and is safe to retry."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status
        self.retryable = True


@dataclass
class IngestCounters:
    """Per-run diagnostics; skipped lines are counted, never fatal."""

    records: int = 0
    skipped_bad_json: int = 0
    skipped_missing_id: int = 0
    skipped_bad_qid: int = 0
    skipped_non_item: int = 0
    dropped_labels_empty: int = 0
    dropped_labels_bad_code: int = 0
    labels_with_control_chars: int = 0

    def as_dict(self) -> dict[str, int]:
        return dict(self.__dict__)


def open_dump(path) -> IO[str]:
    """Open a dump file as a UTF-8 text stream, sniffing gzip/bzip2 by magic bytes."""
    raw = open(path, "rb")
    head = raw.read(3)
    raw.seek(0)
    if head[:2] == _GZIP_MAGIC:
        return io.TextIOWrapper(gzip.GzipFile(fileobj=raw), encoding="utf-8")
    if head == _BZIP2_MAGIC:
        return io.TextIOWrapper(bz2.BZ2File(raw), encoding="utf-8")
    return io.TextIOWrapper(raw, encoding="utf-8")


def _truthy_targets(claims: dict, prop: str) -> frozenset[str]:
    """Item targets of non-deprecated statements for one property."""
    targets = []
    for statement in claims.get(prop, ()):
        if not isinstance(statement, dict):
            continue
        if statement.get("rank") == "deprecated":
            continue
        snak = statement.get("mainsnak", {})
        if snak.get("snaktype") != "value":
            continue
        value = snak.get("datavalue", {}).get("value")
        if isinstance(value, dict) and isinstance(value.get("id"), str):
            targets.append(value["id"])
    return frozenset(targets)


def record_from_entity(entity: dict, counters: IngestCounters | None = None) -> EntityRecord | None:
    """Build an EntityRecord from one parsed entity object.

    Handles both the official dump shape (labels as {"language","value"}
    objects, claims with statement lists) and the simplified fixture shape
    (labels as plain strings, instance_of/subclass_of as arrays). Returns
    None for entities that should be skipped.
    """
    counters = counters if counters is not None else IngestCounters()
    if entity.get("type") not in (None, "item"):
        counters.skipped_non_item += 1
        return None
    qid = entity.get("id") or entity.get("qid")
    if not isinstance(qid, str):
        counters.skipped_missing_id += 1
        return None
    if not is_valid_qid(qid):
        counters.skipped_bad_qid += 1
        return None

    labels: dict[str, str] = {}
    for code, value in (entity.get("labels") or {}).items():
        text = value.get("value") if isinstance(value, dict) else value
        if not isinstance(text, str):
            counters.dropped_labels_empty += 1
            continue
        text = text.strip()
        if not text:
            counters.dropped_labels_empty += 1
            continue
        code = code.lower()
        if not is_valid_language_code(code):
            counters.dropped_labels_bad_code += 1
            continue
        if has_control_chars(text):
            counters.labels_with_control_chars += 1
        labels[code] = text

    claims = entity.get("claims")
    if isinstance(claims, dict):
        instance_of = _truthy_targets(claims, "P31")
        subclass_of = _truthy_targets(claims, "P279")
    else:
        instance_of = frozenset(entity.get("instance_of", ()))
        subclass_of = frozenset(entity.get("subclass_of", ()))

    counters.records += 1
    return EntityRecord(qid=qid, labels=labels, instance_of=instance_of, subclass_of=subclass_of)


def parse_dump_stream(
    lines: Iterable[str] | IO[str],
    mode: str = "auto",
    counters: IngestCounters | None = None,
) -> Iterator[EntityRecord]:
    """Yield EntityRecords from a dump stream, one per well-formed entity line.

    ``mode`` may be "auto", "dump-array" or "jsonl"; all three tolerate the
    array framing tokens and trailing commas, so the flag is documentation of
    intent rather than a parser switch. Records come out in input order.
    Malformed lines are counted and skipped.
    """
    if mode not in ("auto", "dump-array", "jsonl"):
        raise ValueError(f"unknown dump mode: {mode!r}")
    counters = counters if counters is not None else IngestCounters()
    for line in lines:
        line = line.strip()
        if not line or line in ("[", "]"):
            continue
        if line.endswith(","):
            line = line[:-1]
        try:
            entity = json.loads(line)
        except json.JSONDecodeError:
            counters.skipped_bad_json += 1
            continue
        if not isinstance(entity, dict):
            counters.skipped_bad_json += 1
            continue
        record = record_from_entity(entity, counters)
        if record is not None:
            yield record


def parse_dump_file(path, mode: str = "auto", counters: IngestCounters | None = None) -> Iterator[EntityRecord]:
    with open_dump(path) as stream:
        yield from parse_dump_stream(stream, mode=mode, counters=counters)


def _default_http_get(url: str) -> tuple[int, bytes]:
    import requests

    resp = requests.get(url, timeout=30, headers={"User-Agent": "wdnames/0.1"})
    return resp.status_code, resp.content


def entity_data_url(qid: str, endpoint: str) -> str:
    return f"{endpoint.rstrip('/')}/wiki/Special:EntityData/{qid}.json"


def fetch_entity(qid: str, endpoint: str | None = None, http_get=None) -> EntityRecord:
    """Fetch one entity from the EntityData API and parse it like a dump line.

    The endpoint defaults to the WDNAMES_ENDPOINT environment variable, then
    to wikidata.org. ``http_get`` may be injected for testing and must return
    (status_code, body_bytes).
    """
    if not is_valid_qid(qid):
        raise ValueError(f"not a well-formed item identifier: {qid!r}")
    endpoint = endpoint or os.environ.get(ENDPOINT_ENV_VAR) or DEFAULT_ENDPOINT
    get = http_get or _default_http_get
    url = entity_data_url(qid, endpoint)
    try:
        status, body = get(url)
    except Exception as exc:  # network-level failure
        raise FetchError(f"fetch failed for {qid}: {exc}") from exc
    if status != 200:
        raise FetchError(f"fetch failed for {qid}: HTTP {status}", status=status)
    try:
        data = json.loads(body)
    except json.JSONDecodeError as exc:
        raise IngestError(f"response for {qid} is not JSON: {exc}") from exc
    entities = data.get("entities") or {}
    # Redirected (merged) items come back keyed by their canonical qid.
    entity = entities.get(qid) or next(iter(entities.values()), None)
    if entity is None:
        raise IngestError(f"response for {qid} contains no entity")
    record = record_from_entity(entity)
    if record is None:
        raise IngestError(f"response for {qid} is not a parseable item")
    return record
