"""Unicode script detection, per-language script filtering, script entropy.

Script lookups come from a pinned range table shipped as package data
(data/unicode_scripts.tsv, generated from the Unicode Character Database;
the Unicode version is recorded in the file header and echoed into reports).
A name's majority script is the most frequent Script property value among
its codepoints after excluding Common, Inherited and Unknown, with ties
broken by the earliest tying codepoint.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping

import numpy as np

from .records import TypedName

logger = logging.getLogger(__name__)

EXCLUDED_TAGS = ("Common", "Inherited", "Unknown")

PROFILE_PER_NAME = "per-name"
PROFILE_PER_CODEPOINT = "per-codepoint"
PROFILE_MODES = (PROFILE_PER_NAME, PROFILE_PER_CODEPOINT)


class ScriptTable:
    """Contiguous codepoint ranges -> long script names, from the pinned table."""

    def __init__(self, starts: np.ndarray, names: list[str], unicode_version: str):
        self.starts = starts
        self.names = names
        self.unicode_version = unicode_version
        self.name_set = frozenset(names) | frozenset(EXCLUDED_TAGS)
        # Many ranges share one script; majority voting is keyed by script,
        # so map range rows onto per-script ids.
        self._script_names = sorted(set(names))
        ids = {name: i for i, name in enumerate(self._script_names)}
        self._row_script = np.array([ids[name] for name in names], dtype=np.int64)
        self._excluded_ids = frozenset(ids[t] for t in EXCLUDED_TAGS if t in ids)

    def script_ids(self, text: str) -> np.ndarray:
        """Per-script id for each codepoint (index into the sorted script names)."""
        cps = np.fromiter(map(ord, text), dtype=np.int64, count=len(text))
        rows = np.searchsorted(self.starts, cps, side="right") - 1
        return self._row_script[rows]

    def script_of(self, char: str) -> str:
        return self.names[int(np.searchsorted(self.starts, ord(char), side="right")) - 1]

    def majority_script(self, name: str) -> str:
        """Most frequent script among a name's codepoints.

        Common/Inherited/Unknown codepoints do not vote (spaces and
        punctuation would dominate short names otherwise); if nothing else
        remains the result is Common.
        """
        if not name:
            raise ValueError("majority_script requires a nonempty name")
        ids = self.script_ids(name)
        counts: dict[int, int] = {}
        first_pos: dict[int, int] = {}
        for pos, sid in enumerate(ids.tolist()):
            if sid in self._excluded_ids:
                continue
            counts[sid] = counts.get(sid, 0) + 1
            if sid not in first_pos:
                first_pos[sid] = pos
        if not counts:
            return "Common"
        best = max(counts, key=lambda sid: (counts[sid], -first_pos[sid]))
        return self._script_names[best]

    def codepoint_scripts(self, name: str) -> list[str]:
        return [self._script_names[i] for i in self.script_ids(name).tolist()]


@lru_cache(maxsize=1)
def default_table() -> ScriptTable:
    text = (resources.files("wdnames") / "data" / "unicode_scripts.tsv").read_text("utf-8")
    version = "unknown"
    starts: list[int] = []
    names: list[str] = []
    for line in text.splitlines():
        if line.startswith("#"):
            if "unicode_version:" in line:
                version = line.split("unicode_version:", 1)[1].strip()
            continue
        if not line.strip():
            continue
        start_hex, name = line.split("\t")
        starts.append(int(start_hex, 16))
        names.append(name)
    return ScriptTable(np.array(starts, dtype=np.int64), names, version)


def majority_script(name: str) -> str:
    return default_table().majority_script(name)


def script_entropy(profile: Mapping[str, int]) -> float:
    """Shannon entropy (base 2) of a script-tag count distribution."""
    total = sum(profile.values())
    if total <= 0:
        raise ValueError("script_entropy requires a nonempty profile")
    entropy = 0.0
    for count in profile.values():
        if count > 0:
            p = count / total
            entropy -= p * math.log2(p)
    return entropy


def build_profiles(
    names: Iterable[TypedName],
    mode: str = PROFILE_PER_NAME,
    table: ScriptTable | None = None,
) -> dict[str, Counter]:
    """Per-language script profiles.

    per-name mode (the default) counts one majority tag per name;
    per-codepoint mode counts every codepoint's tag instead.
    """
    if mode not in PROFILE_MODES:
        raise ValueError(f"unknown profile mode: {mode!r}")
    table = table or default_table()
    profiles: dict[str, Counter] = {}
    for name in names:
        profile = profiles.setdefault(name.language, Counter())
        if mode == PROFILE_PER_NAME:
            profile[table.majority_script(name.label)] += 1
        else:
            profile.update(table.codepoint_scripts(name.label))
    return profiles


def load_allowed_scripts(path=None, table: ScriptTable | None = None) -> dict[str, frozenset[str]]:
    """Parse an allowed-scripts TSV: language_code<TAB>comma-separated tags.

    '#' lines are comments. Tags are validated against the pinned script
    table's value set.
    """
    table = table or default_table()
    if path is None:
        text = (resources.files("wdnames") / "data" / "allowed_scripts.tsv").read_text("utf-8")
    else:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    allowed: dict[str, frozenset[str]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            code, tags_field = line.split("\t")
        except ValueError:
            raise ValueError(f"allowed-scripts line {lineno}: expected 2 tab-separated fields")
        tags = frozenset(t.strip() for t in tags_field.split(",") if t.strip())
        if not tags:
            raise ValueError(f"allowed-scripts line {lineno}: empty script set for {code!r}")
        unknown = tags - table.name_set
        if unknown:
            raise ValueError(
                f"allowed-scripts line {lineno}: unknown script tag(s) {sorted(unknown)}"
            )
        allowed[code] = tags
    return allowed


@dataclass
class FilterCounters:
    kept: int = 0
    removed: int = 0
    unlisted_languages: set = field(default_factory=set)

    def as_dict(self) -> dict:
        return {
            "kept": self.kept,
            "removed": self.removed,
            "unlisted_languages": len(self.unlisted_languages),
        }


def iter_script_filter(
    names: Iterable[TypedName],
    allowed: Mapping[str, frozenset[str]],
    counters: FilterCounters | None = None,
    table: ScriptTable | None = None,
):
    """Yield (name, keep) pairs; keep iff the majority script is allowed.

    Languages absent from the allowed map pass through unfiltered with a
    one-time warning.
    """
    counters = counters if counters is not None else FilterCounters()
    table = table or default_table()
    for name in names:
        scripts = allowed.get(name.language)
        if scripts is None:
            if name.language not in counters.unlisted_languages:
                counters.unlisted_languages.add(name.language)
                logger.warning(
                    "language %s has no allowed-scripts entry; passing through unfiltered",
                    name.language,
                )
            keep = True
        else:
            keep = table.majority_script(name.label) in scripts
        if keep:
            counters.kept += 1
        else:
            counters.removed += 1
        yield name, keep


def filter_names(
    names: Iterable[TypedName],
    allowed: Mapping[str, frozenset[str]],
    table: ScriptTable | None = None,
) -> tuple[list[TypedName], list[TypedName]]:
    """Exact partition of the input into (kept, removed)."""
    kept: list[TypedName] = []
    removed: list[TypedName] = []
    for name, keep in iter_script_filter(names, allowed, table=table):
        (kept if keep else removed).append(name)
    return kept, removed


def entropy_report_rows(
    before: Mapping[str, Counter],
    after: Mapping[str, Counter],
) -> tuple[list[tuple], tuple[float, float]]:
    """Per-language (language, H_before, H_after, n_before, n_after, flag) rows
    plus the unweighted macro-average pair.

    Languages whose names all got filtered away appear with after-entropy 0
    and the ``no_names_after`` flag.
    """
    rows = []
    before_sum = after_sum = 0.0
    for language in sorted(before):
        profile_before = before[language]
        profile_after = after.get(language) or Counter()
        h_before = script_entropy(profile_before)
        n_after = sum(profile_after.values())
        flag = ""
        if n_after == 0:
            h_after = 0.0
            flag = "no_names_after"
        else:
            h_after = script_entropy(profile_after)
        rows.append(
            (language, h_before, h_after, sum(profile_before.values()), n_after, flag)
        )
        before_sum += h_before
        after_sum += h_after
    count = len(rows)
    macro = (before_sum / count, after_sum / count) if count else (0.0, 0.0)
    return rows, macro


def write_entropy_report(
    path,
    before: Mapping[str, Counter],
    after: Mapping[str, Counter],
    table: ScriptTable | None = None,
) -> tuple[float, float]:
    table = table or default_table()
    rows, macro = entropy_report_rows(before, after)
    with open(path, "w", encoding="utf-8") as f:
        f.write("# entropy_base: 2\n")
        f.write(f"# unicode_version: {table.unicode_version}\n")
        f.write("# language\tentropy_before\tentropy_after\tnames_before\tnames_after\tflag\n")
        for language, h_before, h_after, n_before, n_after, flag in rows:
            f.write(f"{language}\t{h_before:.4f}\t{h_after:.4f}\t{n_before}\t{n_after}\t{flag}\n")
        f.write(f"MACRO_AVG\t{macro[0]:.4f}\t{macro[1]:.4f}\t\t\t\n")
    return macro
