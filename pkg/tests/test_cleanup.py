"""Parenthetical removal: examples, edge cases and algebraic properties."""

from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from wdnames.cleanup import strip_parentheticals, strip_parentheticals_ex


def test_wang_lina():
    assert strip_parentheticals("Wang Lina (boxer)") == "Wang Lina"


def test_noop_label():
    assert strip_parentheticals("Joe Biden") == "Joe Biden"


def test_multiple_parentheticals():
    assert strip_parentheticals("A (b) C (d)") == "A C"


def test_fullwidth_pairs():
    assert strip_parentheticals("王丽娜（拳击手）") == "王丽娜"


def test_nested_parentheticals():
    assert strip_parentheticals("A (b (c) d) E") == "A E"
    assert strip_parentheticals("((x))") == ""


def test_adjacent_without_spaces():
    assert strip_parentheticals("A(b)C") == "AC"


def test_unbalanced_left_in_place_and_flagged():
    cleaned, unbalanced = strip_parentheticals_ex("A (b C")
    assert cleaned == "A (b C"
    assert unbalanced

    cleaned, unbalanced = strip_parentheticals_ex("A (b) (c C")
    assert cleaned == "A (c C"
    assert unbalanced

    cleaned, unbalanced = strip_parentheticals_ex("Wang Lina (boxer)")
    assert cleaned == "Wang Lina"
    assert not unbalanced


def test_paren_free_labels_returned_byte_identical():
    for label in ("a  b ", "\ttab\t", "A [b] {c}", "x　y"):
        assert strip_parentheticals(label) is label or strip_parentheticals(label) == label
        assert strip_parentheticals(label) == label


def test_whole_label_parenthetical_becomes_empty():
    assert strip_parentheticals("(boxer)") == ""
    assert strip_parentheticals("（拳击手）") == ""


bracketed = st.text(alphabet="ab ()（）[]", max_size=24)


@settings(deadline=None, max_examples=400)
@given(bracketed)
def test_idempotent(label):
    once = strip_parentheticals(label)
    assert strip_parentheticals(once) == once


@settings(deadline=None, max_examples=400)
@given(bracketed)
def test_length_never_increases(label):
    assert len(strip_parentheticals(label)) <= len(label)


@settings(deadline=None, max_examples=200)
@given(st.text(alphabet="abc АБВ-.,'", max_size=20))
def test_unbracketed_unchanged(label):
    assert strip_parentheticals(label) == label
