"""Edit-distance-driven name order normalization toward the English order.

A PER label is whitespace-tokenized (separating commas stripped), every
token permutation is romanized, and the permutation whose romanization is
closest to the English label by character Levenshtein distance wins. Ties
keep the original order. Romanized candidates are lowercased before the
distance comparison; the English reference is used verbatim, matching the
comparison space of the reference romanizer's output.

Romanization is pluggable: a table-driven romanizer ships with Cyrillic,
Greek and Hebrew tables, and any external line-in/line-out command can be
used instead.
"""

from __future__ import annotations

import itertools
import queue
import shlex
import subprocess
import threading
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping, Sequence

from ._kernels import codepoints, levenshtein
from .records import TypedName

DEFAULT_MAX_TOKENS = 6
BUILTIN_TABLES = ("cyrillic", "greek", "hebrew")


class RomanizationTable:
    """Character/grapheme substitution table, applied greedily longest-first.

    Unmapped characters pass through unchanged, so Latin text is stable
    under romanization.
    """

    def __init__(self, entries: Mapping[str, str]):
        for src in entries:
            if not src:
                raise ValueError("romanization table has an empty source sequence")
        self.entries = dict(entries)
        buckets: dict[str, list[tuple[str, str]]] = {}
        for src in sorted(self.entries, key=len, reverse=True):
            buckets.setdefault(src[0], []).append((src, self.entries[src]))
        self._buckets = buckets

    @classmethod
    def from_tsv(cls, path) -> "RomanizationTable":
        with open(path, "r", encoding="utf-8") as f:
            return cls._parse(f.read(), str(path))

    @classmethod
    def _parse(cls, text: str, origin: str) -> "RomanizationTable":
        entries: dict[str, str] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{origin} line {lineno}: expected source<TAB>replacement")
            entries[parts[0]] = parts[1]
        return cls(entries)

    @classmethod
    def builtin(cls, name: str) -> "RomanizationTable":
        text = (resources.files("wdnames") / "data" / "romanization" / f"{name}.tsv").read_text("utf-8")
        return cls._parse(text, f"builtin:{name}")

    def merged_with(self, other: "RomanizationTable") -> "RomanizationTable":
        entries = dict(self.entries)
        entries.update(other.entries)
        return RomanizationTable(entries)

    def apply(self, text: str) -> str:
        out = []
        i = 0
        n = len(text)
        while i < n:
            for src, dst in self._buckets.get(text[i], ()):
                if text.startswith(src, i):
                    out.append(dst)
                    i += len(src)
                    break
            else:
                out.append(text[i])
                i += 1
        return "".join(out)


def load_romanization_tables(sources: Sequence[str] | None = None) -> RomanizationTable:
    """Merge tables given as builtin names or TSV file paths (later wins)."""
    sources = sources or BUILTIN_TABLES
    table = RomanizationTable({})
    for source in sources:
        if source in BUILTIN_TABLES:
            table = table.merged_with(RomanizationTable.builtin(source))
        else:
            table = table.merged_with(RomanizationTable.from_tsv(source))
    return table


def romanize(text: str, table: RomanizationTable) -> str:
    return table.apply(text)


class TableRomanizer:
    """Batch interface over a RomanizationTable."""

    def __init__(self, table: RomanizationTable):
        self.table = table

    def batch(self, lines: Sequence[str]) -> list[str]:
        return [self.table.apply(line) for line in lines]

    def spec(self) -> tuple:
        return ("table", self.table.entries)

    def close(self) -> None:
        pass


class ExternalRomanizer:
    """Co-process romanizer: one input line maps to one output line.

    The child must echo exactly one UTF-8 line per input line; a nonzero
    exit status is fatal. Output is drained on a reader thread so large
    batches cannot deadlock on pipe buffers.
    """

    def __init__(self, command: str | Sequence[str], timeout: float = 60.0):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            encoding="utf-8",
        )
        self._out: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._drain, daemon=True)
        self._reader.start()

    def _drain(self) -> None:
        for line in self._proc.stdout:
            self._out.put(line.rstrip("\n"))
        self._out.put(None)  # EOF marker

    def batch(self, lines: Sequence[str]) -> list[str]:
        for line in lines:
            if "\n" in line:
                raise ValueError("romanizer input lines must not contain newlines")
            self._proc.stdin.write(line + "\n")
        self._proc.stdin.flush()
        results = []
        for _ in lines:
            try:
                item = self._out.get(timeout=self.timeout)
            except queue.Empty:
                self._kill()
                raise RuntimeError(f"external romanizer timed out: {self.command}")
            if item is None:
                code = self._proc.wait()
                raise RuntimeError(
                    f"external romanizer exited early (status {code}): {self.command}"
                )
            results.append(item)
        return results

    def spec(self) -> tuple:
        return ("external", tuple(self.command))

    def _kill(self) -> None:
        self._proc.kill()
        self._proc.wait()

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.stdin.close()
            code = self._proc.wait()
            if code != 0:
                raise RuntimeError(f"external romanizer exited with status {code}: {self.command}")


def make_romanizer(spec: tuple):
    kind, payload = spec
    if kind == "table":
        return TableRomanizer(RomanizationTable(payload))
    if kind == "external":
        return ExternalRomanizer(payload)
    raise ValueError(f"unknown romanizer spec: {kind!r}")


def edit_distance(a: str, b: str) -> int:
    """Unit-cost character Levenshtein distance over Unicode scalar values."""
    return levenshtein(codepoints(a), codepoints(b))


@dataclass(frozen=True)
class ReorderDecision:
    original: str
    chosen: str
    reordered: bool
    original_distance: int
    chosen_distance: int
    searched: bool = True  # False when the token count ruled out a search


def _tokenize(label: str) -> list[str]:
    """Whitespace tokens with separating commas stripped from token edges."""
    tokens = []
    for token in label.split():
        token = token.strip(",")
        if token:
            tokens.append(token)
    return tokens


def reorder_name(
    label: str,
    english: str,
    romanizer,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> ReorderDecision:
    """Pick the token permutation whose romanization is closest to the English label.

    Single-token labels and labels beyond ``max_tokens`` (factorial blowup)
    pass through unchanged. Ties favor the original order, then the smallest
    permutation index, so the result is deterministic.
    """
    if not english:
        raise ValueError("english reference label must be nonempty")
    eng = codepoints(english)
    tokens = _tokenize(label)
    if len(tokens) <= 1 or len(tokens) > max_tokens:
        d = levenshtein(codepoints(romanizer.batch([label])[0].lower()), eng)
        return ReorderDecision(label, label, False, d, d, searched=False)

    perms = list(itertools.permutations(range(len(tokens))))
    candidates = [" ".join(tokens[i] for i in perm) for perm in perms]
    romanized = romanizer.batch(candidates)
    original_distance = levenshtein(codepoints(romanized[0].lower()), eng)
    best_index, best_distance = 0, original_distance
    if original_distance > 0:
        for i in range(1, len(candidates)):
            d = levenshtein(codepoints(romanized[i].lower()), eng)
            if d < best_distance:
                best_index, best_distance = i, d
    chosen = candidates[best_index]
    return ReorderDecision(label, chosen, chosen != label, original_distance, best_distance)


@dataclass
class ReorderStats:
    per_names: int = 0
    reordered: int = 0
    missing_english: int = 0
    skipped_token_count: int = 0

    @property
    def fraction_reordered(self) -> float:
        return self.reordered / self.per_names if self.per_names else 0.0

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["fraction_reordered"] = self.fraction_reordered
        return d


_worker_romanizer = None
_worker_max_tokens = DEFAULT_MAX_TOKENS


def _init_worker(spec: tuple, max_tokens: int) -> None:
    global _worker_romanizer, _worker_max_tokens
    _worker_romanizer = make_romanizer(spec)
    _worker_max_tokens = max_tokens


def _reorder_task(pair: tuple[str, str]) -> tuple:
    label, english = pair
    d = reorder_name(label, english, _worker_romanizer, _worker_max_tokens)
    return (d.original, d.chosen, d.reordered, d.original_distance, d.chosen_distance, d.searched)


def reorder_corpus(
    names: Iterable[TypedName],
    english_by_qid: Mapping[str, str],
    romanizer,
    max_tokens: int = DEFAULT_MAX_TOKENS,
    workers: int = 1,
) -> tuple[list[TypedName], list[tuple[str, str, ReorderDecision]], ReorderStats]:
    """Normalize every PER name that has an English reference.

    Non-PER names and names without a reference pass through unchanged (the
    latter are counted). Returns the output names in input order, one
    decision per processed name as (qid, language, decision), and run stats.
    """
    names = list(names)
    stats = ReorderStats()
    tasks: list[tuple[int, str, str]] = []
    for position, name in enumerate(names):
        if "PER" not in name.types:
            continue
        stats.per_names += 1
        english = english_by_qid.get(name.qid, "")
        if not english:
            stats.missing_english += 1
            continue
        tasks.append((position, name.label, english))

    if workers > 1 and tasks:
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_init_worker,
            initargs=(romanizer.spec(), max_tokens),
        ) as pool:
            chunk = max(1, len(tasks) // (workers * 4))
            raw = list(pool.map(_reorder_task, [(t[1], t[2]) for t in tasks], chunksize=chunk))
        results = [ReorderDecision(*r) for r in raw]
    else:
        results = [reorder_name(label, english, romanizer, max_tokens) for _, label, english in tasks]

    out = list(names)
    decisions: list[tuple[str, str, ReorderDecision]] = []
    for (position, _, _), decision in zip(tasks, results):
        name = names[position]
        if not decision.searched:
            stats.skipped_token_count += 1
        if decision.reordered:
            stats.reordered += 1
            out[position] = TypedName(name.qid, name.language, decision.chosen, name.types)
        decisions.append((name.qid, name.language, decision))
    return out, decisions, stats


def collect_english_labels(names: Iterable[TypedName]) -> dict[str, str]:
    """qid -> English label map drawn from the stream's own 'en' rows."""
    english: dict[str, str] = {}
    for name in names:
        if name.language == "en":
            english[name.qid] = name.label
    return english


def write_decisions_tsv(path, decisions: Iterable[tuple[str, str, ReorderDecision]]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("# commas are stripped from token edges before permutation\n")
        f.write("# qid\tlanguage\toriginal\tchosen\toriginal_distance\tchosen_distance\treordered\n")
        for qid, language, d in decisions:
            f.write(
                f"{qid}\t{language}\t{d.original}\t{d.chosen}"
                f"\t{d.original_distance}\t{d.chosen_distance}\t{int(d.reordered)}\n"
            )
