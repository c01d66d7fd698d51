"""Store build/lookup behavior and subclass-graph reachability."""

from __future__ import annotations

import os

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wdnames.records import EntityRecord
from wdnames.store import ClassGraph, InMemoryStore, IntegrityError, Store, descendants


def rec(qid, labels=None, subclass_of=()):
    return EntityRecord(qid, labels or {}, frozenset(), frozenset(subclass_of))


def descendants_oracle(edges: dict, root: str) -> set:
    """Repeated edge relaxation to a fixpoint, independent of the BFS path."""
    result = {root}
    changed = True
    while changed:
        changed = False
        for child, parents in edges.items():
            if child not in result and any(p in result for p in parents):
                result.add(child)
                changed = True
    return result


def test_build_two_distinct_records(tmp_path):
    store = Store.build([rec("Q1", {"en": "a"}), rec("Q2", {"en": "b"})], tmp_path / "s")
    assert len(store) == 2
    assert store.get("Q1").labels == {"en": "a"}
    assert store.get("Q404") is None
    assert "Q2" in store
    store.close()


def test_identical_duplicates_dedup(tmp_path):
    r = rec("Q1", {"en": "a"})
    store = Store.build([r, r], tmp_path / "s")
    assert len(store) == 1
    store.close()


def test_conflicting_duplicate_is_fatal(tmp_path):
    with pytest.raises(IntegrityError):
        Store.build([rec("Q1", {"en": "a"}), rec("Q1", {"en": "b"})], tmp_path / "s")


def test_cycle_build_and_descendants(tmp_path):
    records = [rec("Q1", subclass_of=("Q2",)), rec("Q2", subclass_of=("Q1",)), rec("Q3", subclass_of=("Q1",))]
    store = Store.build(records, tmp_path / "s")
    graph = store.class_graph()
    result = descendants(graph, "Q1")
    assert result == {"Q1", "Q2", "Q3"}
    assert result == descendants_oracle({c: set(p) for c, p in graph.edges.items()}, "Q1")
    store.close()


def test_chain_descendants():
    graph = ClassGraph({"Q3": {"Q2"}, "Q2": {"Q1"}})
    assert descendants(graph, "Q1") == {"Q1", "Q2", "Q3"}
    assert descendants(graph, "Q1") == descendants_oracle({"Q3": {"Q2"}, "Q2": {"Q1"}}, "Q1")


def test_empty_graph_descendants():
    assert descendants(ClassGraph({}), "Q5") == {"Q5"}


def test_file_layout(tmp_path):
    records = [
        rec("Q10", {"en": "ten"}, subclass_of=("Q2",)),
        rec("Q2", {"en": "two"}),
        rec("Q1", {"en": "one"}, subclass_of=("Q2", "Q10")),
    ]
    path = tmp_path / "s"
    store = Store.build(records, path)
    assert sorted(os.listdir(path)) == ["classgraph.tsv", "index.tsv", "records.jsonl"]
    index_lines = (path / "index.tsv").read_text().splitlines()
    assert [line.split("\t")[0] for line in index_lines] == ["Q1", "Q2", "Q10"]
    graph_lines = (path / "classgraph.tsv").read_text().splitlines()
    assert graph_lines == ["Q1\tQ2", "Q1\tQ10", "Q10\tQ2"]
    # offsets resolve to the right records
    for r in records:
        assert store.get(r.qid) == r
    assert sorted(store.qids()) == ["Q1", "Q10", "Q2"]
    assert [r.qid for r in store.iter_records()] == ["Q10", "Q2", "Q1"]
    store.close()


def test_rebuild_is_idempotent(tmp_path):
    records = [rec("Q1", {"en": "a"}, subclass_of=("Q9",)), rec("Q2", {"ru": "б"})]
    a, b = tmp_path / "a", tmp_path / "b"
    Store.build(iter(records), a).close()
    Store.build(iter(records), b).close()
    for name in ("records.jsonl", "index.tsv", "classgraph.tsv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_concurrent_readers(tmp_path):
    from concurrent.futures import ThreadPoolExecutor

    records = [rec(f"Q{i}", {"en": f"name {i}" * (i % 7 + 1)}) for i in range(1, 101)]
    store = Store.build(records, tmp_path / "s")
    expected = {r.qid: r for r in records}

    def hammer(seed: int) -> bool:
        import random

        rng = random.Random(seed)
        for _ in range(200):
            qid = f"Q{rng.randint(1, 100)}"
            if store.get(qid) != expected[qid]:
                return False
        return True

    with ThreadPoolExecutor(max_workers=8) as pool:
        assert all(pool.map(hammer, range(8)))
    store.close()


def test_in_memory_store_parity(tmp_path):
    records = [rec("Q1", {"en": "a"}, subclass_of=("Q2",)), rec("Q2", {"en": "b"})]
    disk = Store.build(records, tmp_path / "s")
    mem = InMemoryStore(records)
    assert len(disk) == len(mem)
    for qid in ("Q1", "Q2", "Q404"):
        assert disk.get(qid) == mem.get(qid)
    assert disk.class_graph().edges == mem.class_graph().edges
    with pytest.raises(IntegrityError):
        InMemoryStore([rec("Q1", {"en": "a"}), rec("Q1", {"en": "b"})])
    disk.close()


graph_strategy = st.dictionaries(
    st.from_regex(r"Q[1-9]", fullmatch=True),
    st.sets(st.from_regex(r"Q[1-9]", fullmatch=True), min_size=1, max_size=3),
    max_size=6,
)


@settings(deadline=None, max_examples=100)
@given(edges=graph_strategy, root=st.from_regex(r"Q[1-9]", fullmatch=True))
def test_descendants_is_a_fixpoint(edges, root):
    graph = ClassGraph(edges)
    result = descendants(graph, root)
    assert result == descendants_oracle(edges, root)
    # one more reverse-edge expansion adds nothing
    expanded = set(result)
    for child, parents in edges.items():
        if any(p in result for p in parents):
            expanded.add(child)
    assert expanded == result


@settings(deadline=None, max_examples=100)
@given(
    edges=graph_strategy,
    extra_child=st.from_regex(r"Q[1-9]", fullmatch=True),
    extra_parent=st.from_regex(r"Q[1-9]", fullmatch=True),
    root=st.from_regex(r"Q[1-9]", fullmatch=True),
)
def test_adding_an_edge_never_shrinks_descendants(edges, extra_child, extra_parent, root):
    before = descendants(ClassGraph(edges), root)
    augmented = {c: set(p) for c, p in edges.items()}
    augmented.setdefault(extra_child, set()).add(extra_parent)
    after = descendants(ClassGraph(augmented), root)
    assert before <= after
