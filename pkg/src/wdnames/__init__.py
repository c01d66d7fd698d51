"""wdnames: build a multilingual parallel name resource from Wikidata dumps.

The pipeline streams entity records out of a dump, assigns high-level
PER/LOC/ORG types via the subclass hierarchy, standardizes scripts and
removes parenthesized disambiguators, normalizes PER name token order
toward the English order, and emits deterministic TSV resource files.
"""

__version__ = "0.1.0"
