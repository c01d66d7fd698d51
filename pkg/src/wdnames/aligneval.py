"""Alignment-based noise measurement and reordering evaluation.

Crossing edges in token alignments between a label and its English label
quantify name-order divergence (averaged per language as MCA). Reordering
quality is scored against a gold set by exact-match accuracy, mean F1 based
on the character-level longest common subsequence, and precision/recall of
the needs-reordering decision (positive class: needs reordering).

The word aligner itself is external; this module only parses its output
format ("i-j" pairs per line) and writes the bitext it consumes.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from ._kernels import codepoints, crossing_count as _crossing_kernel, lcs_length
from .records import TypedName

logger = logging.getLogger(__name__)

_PAIR_RE = re.compile(r"(\d+)-(\d+)\Z")


@dataclass(frozen=True)
class AlignmentGraph:
    """Bipartite token alignment: zero-based (source, target) index pairs."""

    edges: frozenset[tuple[int, int]]

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "AlignmentGraph":
        return cls(frozenset(pairs))


def crossing_count(graph: AlignmentGraph) -> int:
    """Number of unordered edge pairs {(i,j),(k,l)} with (i-k)*(j-l) < 0."""
    if len(graph.edges) < 2:
        return 0
    edges = sorted(graph.edges)
    src = np.array([e[0] for e in edges], dtype=np.int64)
    tgt = np.array([e[1] for e in edges], dtype=np.int64)
    return _crossing_kernel(src, tgt)


def parse_alignment_line(line: str) -> AlignmentGraph | None:
    """One aligner output line -> graph; None if any pair token is malformed.

    An empty line is a valid empty graph; duplicate pairs collapse.
    """
    tokens = line.split()
    pairs = []
    for token in tokens:
        m = _PAIR_RE.match(token)
        if not m:
            return None
        pairs.append((int(m.group(1)), int(m.group(2))))
    return AlignmentGraph.from_pairs(pairs)


def parse_alignments(lines: Iterable[str], counters: dict | None = None) -> Iterator[AlignmentGraph]:
    """Graphs from aligner output, skipping malformed lines with a counter."""
    counters = counters if counters is not None else {}
    counters.setdefault("parsed", 0)
    counters.setdefault("skipped_malformed", 0)
    for line in lines:
        graph = parse_alignment_line(line.rstrip("\n"))
        if graph is None:
            counters["skipped_malformed"] += 1
            continue
        counters["parsed"] += 1
        yield graph


def mean_crossing_alignments(
    graphs_by_language: Mapping[str, Sequence[AlignmentGraph]],
) -> dict[str, float]:
    """Arithmetic mean of per-name crossing counts for each language.

    Only aligned names (nonempty edge sets) enter the average; empty graphs
    would dilute the mean with zeros. Languages with no aligned names are
    omitted with a warning. ``count_aligned`` reports the split.
    """
    mca: dict[str, float] = {}
    for language, graphs in graphs_by_language.items():
        aligned = [g for g in graphs if g.edges]
        if not aligned:
            logger.warning("language %s has no aligned names; omitting from MCA", language)
            continue
        mca[language] = sum(crossing_count(g) for g in aligned) / len(aligned)
    return mca


def count_aligned(
    graphs_by_language: Mapping[str, Sequence[AlignmentGraph]],
) -> tuple[dict[str, int], int]:
    """Per-language aligned-name counts plus the total number of unaligned names."""
    counts = {lang: sum(1 for g in graphs if g.edges) for lang, graphs in graphs_by_language.items()}
    unaligned = sum(len(graphs) for graphs in graphs_by_language.values()) - sum(counts.values())
    return counts, unaligned


def mca_histogram(values: Sequence[float], bins: int = 20) -> list[tuple[float, float, int]]:
    """(bin_low, bin_high, language_count) rows over equal-width bins from 0."""
    if not values:
        return []
    top = max(max(values), 1e-9)
    counts, edges = np.histogram(list(values), bins=bins, range=(0.0, top))
    return [(float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(len(counts))]


def write_mca_report(path, mca: Mapping[str, float], name_counts: Mapping[str, int]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("# language\tname_count\tmca\n")
        for language in sorted(mca):
            f.write(f"{language}\t{name_counts.get(language, 0)}\t{mca[language]:.4f}\n")


def write_mca_histogram(path, mca: Mapping[str, float], bins: int = 20) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("# bin_low\tbin_high\tlanguage_count\n")
        for low, high, count in mca_histogram(list(mca.values()), bins=bins):
            f.write(f"{low:.4f}\t{high:.4f}\t{count}\n")


def write_bitext(
    names: Iterable[TypedName],
    english_by_qid: Mapping[str, str],
    bitext_path,
    languages_path=None,
) -> int:
    """Aligner input: "label tokens ||| english tokens" per line.

    Rows without an English reference are skipped. A parallel per-line
    language file supports grouping the aligner's output back by language.
    """
    written = 0
    lang_file = open(languages_path, "w", encoding="utf-8") if languages_path else None
    try:
        with open(bitext_path, "w", encoding="utf-8") as f:
            for name in names:
                english = english_by_qid.get(name.qid, "")
                if not english:
                    continue
                f.write(f"{' '.join(name.label.split())} ||| {' '.join(english.split())}\n")
                if lang_file:
                    lang_file.write(name.language + "\n")
                written += 1
    finally:
        if lang_file:
            lang_file.close()
    return written


def lcs_f1(hypothesis: str, reference: str) -> float:
    """F1 of character LCS length against hypothesis/reference lengths.

    1.0 iff the strings are equal; 0.0 when nothing is shared or the
    hypothesis is empty.
    """
    if not reference:
        raise ValueError("lcs_f1 requires a nonempty reference")
    if not hypothesis:
        return 0.0
    common = lcs_length(codepoints(hypothesis), codepoints(reference))
    if common == 0:
        return 0.0
    precision = common / len(hypothesis)
    recall = common / len(reference)
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class GoldReorderingExample:
    language: str
    input_label: str
    gold_label: str
    needs_reordering: bool


def _comma_free_tokens(label: str) -> list[str]:
    return sorted(t.strip(",") for t in label.split() if t.strip(","))


def read_gold_tsv(path) -> list[GoldReorderingExample]:
    """Load a gold file: language, input, gold, needs_reordering(0/1).

    A fifth column (the entity's English reference label) is tolerated and
    ignored here. Validates the invariants: needs_reordering ==
    (input != gold) and the gold label is a permutation of the input's
    (comma-stripped) tokens.
    """
    examples = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) not in (4, 5):
                raise ValueError(f"{path} line {lineno}: expected 4 or 5 tab-separated fields")
            language, input_label, gold_label, flag = parts[:4]
            needs = flag.strip() == "1"
            if needs != (input_label != gold_label):
                raise ValueError(f"{path} line {lineno}: needs_reordering flag is inconsistent")
            if _comma_free_tokens(input_label) != _comma_free_tokens(gold_label):
                raise ValueError(f"{path} line {lineno}: gold is not a token permutation of input")
            examples.append(GoldReorderingExample(language, input_label, gold_label, needs))
    return examples


@dataclass(frozen=True)
class ReorderingEvalResult:
    """Scores as percentages in [0, 100]."""

    accuracy: float
    mean_f1: float
    precision: float
    recall: float
    examples: int
    positives: int

    def formatted(self) -> str:
        return (
            f"accuracy {self.accuracy:.1f}  mean_f1 {self.mean_f1:.1f}  "
            f"precision {self.precision:.1f}  recall {self.recall:.1f}  "
            f"({self.examples} examples, {self.positives} positive)"
        )


def evaluate_reordering(
    outputs: Sequence[str],
    gold: Sequence[GoldReorderingExample],
) -> ReorderingEvalResult:
    """Score system outputs against gold, one output per gold example."""
    if len(outputs) != len(gold):
        raise ValueError(f"got {len(outputs)} outputs for {len(gold)} gold examples")
    if not gold:
        raise ValueError("cannot evaluate an empty gold set")
    exact = 0
    f1_sum = 0.0
    true_pos = predicted_pos = actual_pos = 0
    for output, example in zip(outputs, gold):
        if output == example.gold_label:
            exact += 1
        f1_sum += lcs_f1(output, example.gold_label)
        predicted = output != example.input_label
        if predicted:
            predicted_pos += 1
        if example.needs_reordering:
            actual_pos += 1
            if predicted:
                true_pos += 1
    n = len(gold)
    return ReorderingEvalResult(
        accuracy=100.0 * exact / n,
        mean_f1=100.0 * f1_sum / n,
        precision=100.0 * true_pos / predicted_pos if predicted_pos else 0.0,
        recall=100.0 * true_pos / actual_pos if actual_pos else 0.0,
        examples=n,
        positives=actual_pos,
    )
