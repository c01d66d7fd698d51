"""Pipeline configuration: one INI-style file, every key flag-overridable.

Sections and keys (defaults in parentheses):

    [paths]   dump, workdir (out), allowed_scripts (builtin),
              romanization_tables (cyrillic,greek,hebrew), gold, alignments,
              languages
    [types]   per_root (Q5), loc_root (Q82794), org_root (Q43229),
              mode (preserve-multi)
    [scripts] profile (per-name), unicode_version (pinned table's version)
    [reorder] max_tokens (6), external_romanizer (unset)
    [runtime] workers (1), endpoint (WDNAMES_ENDPOINT env or wikidata.org)
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields

from .entity_types import TYPE_MODES
from .ingest import DEFAULT_ENDPOINT, ENDPOINT_ENV_VAR
from .records import is_valid_qid
from .scripts import PROFILE_MODES


class ConfigError(Exception):
    """Invalid or inconsistent configuration; maps to exit code 1."""


@dataclass
class PipelineConfig:
    dump: str = ""
    workdir: str = "out"
    allowed_scripts: str = ""          # empty -> packaged default list
    romanization_tables: str = "cyrillic,greek,hebrew"
    gold: str = ""
    alignments: str = ""
    languages: str = ""
    per_root: str = "Q5"
    loc_root: str = "Q82794"
    org_root: str = "Q43229"
    mode: str = "preserve-multi"
    profile: str = "per-name"
    unicode_version: str = ""          # empty -> pinned table version
    max_tokens: int = 6
    external_romanizer: str = ""
    workers: int = 1
    endpoint: str = ""                 # empty -> env var, then default

    _SECTIONS = {
        "paths": ("dump", "workdir", "allowed_scripts", "romanization_tables",
                  "gold", "alignments", "languages"),
        "types": ("per_root", "loc_root", "org_root", "mode"),
        "scripts": ("profile", "unicode_version"),
        "reorder": ("max_tokens", "external_romanizer"),
        "runtime": ("workers", "endpoint"),
    }

    @classmethod
    def key_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        parser = configparser.ConfigParser(interpolation=None)
        read = parser.read(path, encoding="utf-8")
        if not read:
            raise ConfigError(f"cannot read config file: {path}")
        cfg = cls()
        for section in parser.sections():
            if section not in cls._SECTIONS:
                raise ConfigError(f"unknown config section [{section}]")
            for key, value in parser.items(section):
                if key not in cls._SECTIONS[section]:
                    raise ConfigError(f"unknown key {key!r} in section [{section}]")
                cfg._set(key, value)
        return cfg

    def _set(self, key: str, value: str) -> None:
        current = getattr(self, key)
        if isinstance(current, int):
            try:
                value = int(value)
            except ValueError:
                raise ConfigError(f"{key} must be an integer, got {value!r}")
        setattr(self, key, value)

    def apply_overrides(self, overrides: dict) -> None:
        """Flag values win over file values; None/unset flags are ignored."""
        for key, value in overrides.items():
            if value is None:
                continue
            if key not in self.key_names():
                raise ConfigError(f"unknown config key {key!r}")
            self._set(key, str(value))

    def resolved_endpoint(self) -> str:
        return self.endpoint or os.environ.get(ENDPOINT_ENV_VAR) or DEFAULT_ENDPOINT

    def romanization_sources(self) -> list[str]:
        return [s.strip() for s in self.romanization_tables.split(",") if s.strip()]

    def validate(self) -> None:
        problems = []
        if self.workers < 1:
            problems.append("runtime.workers must be >= 1")
        if self.max_tokens < 1:
            problems.append("reorder.max_tokens must be >= 1")
        if self.mode not in TYPE_MODES:
            problems.append(f"types.mode must be one of {TYPE_MODES}")
        if self.profile not in PROFILE_MODES:
            problems.append(f"scripts.profile must be one of {PROFILE_MODES}")
        for key in ("per_root", "loc_root", "org_root"):
            if not is_valid_qid(getattr(self, key)):
                problems.append(f"types.{key} is not a well-formed qid")
        for key in ("allowed_scripts", "gold", "alignments", "languages"):
            value = getattr(self, key)
            if value and not os.path.exists(value):
                problems.append(f"paths.{key} does not exist: {value}")
        from .reorder import BUILTIN_TABLES

        for source in self.romanization_sources():
            if source not in BUILTIN_TABLES and not os.path.exists(source):
                problems.append(f"romanization table does not exist: {source}")
        if self.unicode_version:
            from .scripts import default_table

            pinned = default_table().unicode_version
            if self.unicode_version != pinned:
                problems.append(
                    f"scripts.unicode_version pins {self.unicode_version} but the "
                    f"shipped script table is Unicode {pinned}"
                )
        if problems:
            raise ConfigError("; ".join(problems))

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.key_names()}
