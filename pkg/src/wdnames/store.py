"""Keyed entity store and the P279 class graph.

The on-disk layout is a directory of flat files:

    records.jsonl    one canonical EntityRecord per line, input order
    index.tsv        qid<TAB>byte offset into records.jsonl, sorted by qid number
    classgraph.tsv   child<TAB>parent edge per line (P279), sorted, deduplicated

Records are written once and then read-only; lookups seek into records.jsonl
via the in-memory offset index so labels never need to be resident all at
once. An in-memory store with the same interface backs tests.
"""

from __future__ import annotations

import hashlib
import json
import os
from collections import deque
from typing import Iterable, Iterator, Mapping

from .records import EntityRecord, qid_number

RECORDS_FILE = "records.jsonl"
INDEX_FILE = "index.tsv"
CLASSGRAPH_FILE = "classgraph.tsv"


class IntegrityError(Exception):
    """Duplicate qid with conflicting content."""


class ClassGraph:
    """Directed subclass-of edges, child qid -> set of direct parent qids.

    Wikidata's hierarchy contains cycles; every traversal here uses a visited
    set and terminates regardless.
    """

    def __init__(self, edges: Mapping[str, Iterable[str]] | None = None):
        self.edges: dict[str, frozenset[str]] = {
            child: frozenset(parents) for child, parents in (edges or {}).items()
        }
        self._children: dict[str, set[str]] | None = None

    def parents(self, qid: str) -> frozenset[str]:
        return self.edges.get(qid, frozenset())

    def _reverse(self) -> dict[str, set[str]]:
        if self._children is None:
            rev: dict[str, set[str]] = {}
            for child, parents in self.edges.items():
                for parent in parents:
                    rev.setdefault(parent, set()).add(child)
            self._children = rev
        return self._children

    def children(self, qid: str) -> set[str]:
        return self._reverse().get(qid, set())

    def __len__(self) -> int:
        return sum(len(p) for p in self.edges.values())

    def iter_edges(self) -> Iterator[tuple[str, str]]:
        for child, parents in self.edges.items():
            for parent in parents:
                yield child, parent


def descendants(graph: ClassGraph, root: str) -> set[str]:
    """The root plus every qid from which the root is reachable via P279 edges.

    Plain breadth-first reachability over reverse edges; cycles are fine. An
    unknown root yields {root}.
    """
    seen = {root}
    queue = deque([root])
    while queue:
        node = queue.popleft()
        for child in graph.children(node):
            if child not in seen:
                seen.add(child)
                queue.append(child)
    return seen


def _record_digest(line: str) -> bytes:
    return hashlib.sha256(line.encode("utf-8")).digest()


class Store:
    """Directory-backed read-only record store with an offset index."""

    def __init__(self, path):
        self.path = str(path)
        self._offsets: dict[str, int] = {}
        index_path = os.path.join(self.path, INDEX_FILE)
        with open(index_path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.rstrip("\n")
                if line:
                    qid, offset = line.split("\t")
                    self._offsets[qid] = int(offset)
        self._records = open(os.path.join(self.path, RECORDS_FILE), "rb")

    @classmethod
    def build(cls, records: Iterable[EntityRecord], path) -> "Store":
        """Write the store files from a record stream.

        Identical duplicate records are silently deduplicated; a duplicate
        qid with different content is a fatal IntegrityError. Rebuilding from
        the same input produces identical files.
        """
        os.makedirs(path, exist_ok=True)
        offsets: dict[str, int] = {}
        digests: dict[str, bytes] = {}
        edges: set[tuple[str, str]] = set()
        records_tmp = os.path.join(path, RECORDS_FILE + ".tmp")
        with open(records_tmp, "wb") as out:
            position = 0
            for record in records:
                line = record.to_json_line()
                digest = _record_digest(line)
                previous = digests.get(record.qid)
                if previous is not None:
                    if previous != digest:
                        raise IntegrityError(
                            f"duplicate qid {record.qid} with conflicting content"
                        )
                    continue
                digests[record.qid] = digest
                offsets[record.qid] = position
                data = (line + "\n").encode("utf-8")
                out.write(data)
                position += len(data)
                for parent in record.subclass_of:
                    edges.add((record.qid, parent))
        os.replace(records_tmp, os.path.join(path, RECORDS_FILE))

        index_tmp = os.path.join(path, INDEX_FILE + ".tmp")
        with open(index_tmp, "w", encoding="utf-8") as out:
            for qid in sorted(offsets, key=qid_number):
                out.write(f"{qid}\t{offsets[qid]}\n")
        os.replace(index_tmp, os.path.join(path, INDEX_FILE))

        graph_tmp = os.path.join(path, CLASSGRAPH_FILE + ".tmp")
        with open(graph_tmp, "w", encoding="utf-8") as out:
            for child, parent in sorted(edges, key=lambda e: (qid_number(e[0]), qid_number(e[1]))):
                out.write(f"{child}\t{parent}\n")
        os.replace(graph_tmp, os.path.join(path, CLASSGRAPH_FILE))
        return cls(path)

    def get(self, qid: str) -> EntityRecord | None:
        offset = self._offsets.get(qid)
        if offset is None:
            return None
        return EntityRecord.from_json_obj(json.loads(self._read_line_at(offset)))

    def _read_line_at(self, offset: int) -> str:
        # positional reads: concurrent lookups never share a seek pointer
        fd = self._records.fileno()
        chunks = []
        while True:
            chunk = os.pread(fd, 1 << 16, offset)
            if not chunk:
                break
            end = chunk.find(b"\n")
            if end != -1:
                chunks.append(chunk[:end])
                break
            chunks.append(chunk)
            offset += len(chunk)
        return b"".join(chunks).decode("utf-8")

    def __contains__(self, qid: str) -> bool:
        return qid in self._offsets

    def __len__(self) -> int:
        return len(self._offsets)

    def qids(self) -> Iterator[str]:
        return iter(self._offsets)

    def iter_records(self) -> Iterator[EntityRecord]:
        with open(os.path.join(self.path, RECORDS_FILE), "r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    yield EntityRecord.from_json_obj(json.loads(line))

    def class_graph(self) -> ClassGraph:
        edges: dict[str, set[str]] = {}
        with open(os.path.join(self.path, CLASSGRAPH_FILE), "r", encoding="utf-8") as f:
            for line in f:
                line = line.rstrip("\n")
                if line:
                    child, parent = line.split("\t")
                    edges.setdefault(child, set()).add(parent)
        return ClassGraph(edges)

    def close(self) -> None:
        self._records.close()

    def __enter__(self) -> "Store":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class InMemoryStore:
    """Dict-backed store with the same read interface, for tests."""

    def __init__(self, records: Iterable[EntityRecord] = ()):
        self._records: dict[str, EntityRecord] = {}
        edges: dict[str, set[str]] = {}
        for record in records:
            previous = self._records.get(record.qid)
            if previous is not None:
                if previous != record:
                    raise IntegrityError(f"duplicate qid {record.qid} with conflicting content")
                continue
            self._records[record.qid] = record
            if record.subclass_of:
                edges.setdefault(record.qid, set()).update(record.subclass_of)
        self._graph = ClassGraph(edges)

    def get(self, qid: str) -> EntityRecord | None:
        return self._records.get(qid)

    def __contains__(self, qid: str) -> bool:
        return qid in self._records

    def __len__(self) -> int:
        return len(self._records)

    def qids(self) -> Iterator[str]:
        return iter(self._records)

    def iter_records(self) -> Iterator[EntityRecord]:
        return iter(self._records.values())

    def class_graph(self) -> ClassGraph:
        return self._graph

    def close(self) -> None:
        pass
