"""Remove parenthesized disambiguators from labels.

Wikidata labels sometimes carry clarifying text in parentheses ("Wang Lina
(boxer)") that other languages' labels lack; deleting it keeps parallel
names informationally equal. Both ASCII () and fullwidth （） pairs are
removed; nesting is handled by deleting innermost pairs until a fixpoint.
"""

from __future__ import annotations

import re

_PAREN_CHARS = re.compile(r"[()（）]")
# Innermost parenthetical of either kind; pairs must match in kind.
_INNERMOST = re.compile(r"\([^()（）]*\)|（[^()（）]*）")
_WHITESPACE_RUN = re.compile(r"\s+")


def strip_parentheticals_ex(label: str) -> tuple[str, bool]:
    """Cleaned label plus a flag for leftover unbalanced parenthesis characters.

    Labels containing no parenthesis characters are returned unchanged,
    byte for byte. Otherwise every complete (possibly nested) parenthetical
    is deleted, whitespace runs collapse to single spaces and the result is
    trimmed; unmatched parenthesis characters stay in place and set the flag.
    """
    if not _PAREN_CHARS.search(label):
        return label, False
    text = label
    while True:
        text, n = _INNERMOST.subn("", text)
        if n == 0:
            break
    unbalanced = bool(_PAREN_CHARS.search(text))
    if text != label:
        text = _WHITESPACE_RUN.sub(" ", text).strip()
    return text, unbalanced


def strip_parentheticals(label: str) -> str:
    return strip_parentheticals_ex(label)[0]
