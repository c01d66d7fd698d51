"""High-level entity typing: PER/LOC/ORG assignment, disambiguation, census.

Classification intersects an entity's direct instance-of targets with
precomputed subclass closures rooted at configurable class qids (defaults:
Q5 human, Q82794 geographic region, Q43229 organization). Entities matching
none are excluded from the resource.
"""

from __future__ import annotations

from collections import Counter
from decimal import ROUND_HALF_UP, Decimal
from typing import AbstractSet, Iterable

from .records import EntityRecord, TYPE_ORDER, format_types, sort_types

DEFAULT_ROOTS = {"PER": "Q5", "LOC": "Q82794", "ORG": "Q43229"}

MODE_PRESERVE_MULTI = "preserve-multi"
MODE_DISAMBIGUATE = "disambiguate"
TYPE_MODES = (MODE_PRESERVE_MULTI, MODE_DISAMBIGUATE)

# Single-type resolution for multi-type entities.
_DISAMBIGUATION_RULES = {
    frozenset({"ORG", "PER"}): "ORG",
    frozenset({"ORG", "LOC"}): "LOC",
    frozenset({"LOC", "PER"}): "PER",
    frozenset({"LOC", "ORG", "PER"}): "ORG",
}


def classify(
    entity: EntityRecord,
    per_set: AbstractSet[str],
    loc_set: AbstractSet[str],
    org_set: AbstractSet[str],
) -> frozenset[str] | None:
    """Type set for an entity, or None when no type matches.

    A type is assigned iff the entity's instance-of targets intersect that
    type's subclass closure. Monotone in instance_of: adding a class never
    removes a type.
    """
    instance_of = entity.instance_of
    types = set()
    if not instance_of.isdisjoint(per_set):
        types.add("PER")
    if not instance_of.isdisjoint(loc_set):
        types.add("LOC")
    if not instance_of.isdisjoint(org_set):
        types.add("ORG")
    return frozenset(types) if types else None


def disambiguate(types: AbstractSet[str]) -> str:
    """Collapse a nonempty type set to a single type.

    Singletons map to themselves; multi-type sets follow the fixed rule
    table (ORG+PER -> ORG, ORG+LOC -> LOC, LOC+PER -> PER, all three -> ORG).
    """
    if not types:
        raise ValueError("cannot disambiguate an empty type set")
    if len(types) == 1:
        return next(iter(types))
    return _DISAMBIGUATION_RULES[frozenset(types)]


def round_percentage(count: int, total: int) -> str:
    """Percentage with two decimals, half-up, as printed in census rows."""
    if total == 0:
        return "0.00%"
    pct = Decimal(count) * 100 / Decimal(total)
    return f"{pct.quantize(Decimal('0.01'), rounding=ROUND_HALF_UP)}%"


def type_census(type_sets: Iterable[AbstractSet[str]]) -> list[tuple[str, int, str]]:
    """Rows of (combination, count, percentage), descending by count.

    Combinations are formatted in canonical order with '+' separators
    (e.g. LOC+ORG); ties in count fall back to canonical combination order.
    """
    counts: Counter[frozenset[str]] = Counter()
    for types in type_sets:
        counts[frozenset(types)] += 1
    total = sum(counts.values())

    def combo_rank(combo: frozenset[str]) -> tuple:
        return (len(combo), tuple(TYPE_ORDER.index(t) for t in sort_types(combo)))

    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], combo_rank(kv[0])))
    return [
        (format_types(combo, sep="+"), count, round_percentage(count, total))
        for combo, count in ordered
    ]


def write_census_tsv(rows: list[tuple[str, int, str]], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for combo, count, pct in rows:
            f.write(f"{combo}\t{count}\t{pct}\n")
