#!/usr/bin/env python3
"""Regenerate src/wdnames/data/unicode_scripts.tsv from fontTools' bundled UCD tables.

The output is a contiguous range table: each row is the first codepoint of a
range and the long Script property value name for every codepoint from there
up to the next row's start. Run this after upgrading fontTools to move to a
newer Unicode version; the pinned version is written into the file header.
"""

import re
from pathlib import Path

from fontTools.unicodedata import Scripts, script_name

OUT = Path(__file__).resolve().parent.parent / "src" / "wdnames" / "data" / "unicode_scripts.tsv"


def ucd_version() -> str:
    import inspect

    src = inspect.getsource(Scripts)
    m = re.search(r"Scripts-([0-9.]+)\.txt", src)
    if not m:
        raise RuntimeError("cannot determine UCD version from fontTools Scripts table")
    return m.group(1)


def main() -> None:
    version = ucd_version()
    rows = []
    prev_name = None
    for start, code in zip(Scripts.RANGES, Scripts.VALUES):
        name = script_name(code)
        if name != prev_name:
            rows.append((start, name))
            prev_name = name
    with open(OUT, "w", encoding="utf-8") as f:
        f.write(f"# unicode_version: {version}\n")
        f.write("# range_start\tscript  (range runs to the next row's start; last row to 0x10FFFF)\n")
        for start, name in rows:
            f.write(f"{start:06X}\t{name}\n")
    print(f"wrote {len(rows)} ranges (Unicode {version}) to {OUT}")


if __name__ == "__main__":
    main()
