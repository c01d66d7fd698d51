"""Pipeline orchestration: composable subcommands over one config file.

Stages read and write fixed artifact names inside the configured workdir and
append a machine-readable manifest row (input/output hashes, counters, wall
time) per run, so any stage can be re-run and audited independently.

Exit codes: 1 config validation failure, 2 missing upstream artifact,
3 stage runtime error. Progress and counters go to stderr, never data.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import sys
import time
from collections import Counter
from datetime import datetime, timezone

import click

from .config import ConfigError, PipelineConfig

EXIT_CONFIG = 1
EXIT_MISSING_INPUT = 2
EXIT_RUNTIME = 3

RECORDS = "records.jsonl"
STORE_DIR = "store"
TYPED = "typed.jsonl"
CLEANED = "cleaned.jsonl"
KEPT = "kept.jsonl"
REMOVED = "removed.jsonl"
ENTROPY_REPORT = "entropy_report.tsv"
REORDERED = "reordered.jsonl"
DECISIONS = "reorder_decisions.tsv"
RESOURCE_DIR = "resource"
CENSUS = "census.tsv"
LANGUAGE_COUNTS = "language_counts.tsv"
MANIFEST = "manifest.jsonl"

ALL_STAGES = ("ingest", "build-store", "typeinfer", "clean", "filter-scripts", "reorder", "emit")


def _config_options(command):
    for key in reversed(PipelineConfig.key_names()):
        flag = "--" + key.replace("_", "-")
        opt = click.option(flag, key, default=None, help=f"override config key {key}")
        command = opt(command)
    return command


@click.group()
@click.option("--config", "-c", "config_path", default=None, metavar="FILE",
              help="pipeline config file (INI sections; see README)")
@_config_options
@click.pass_context
def main(ctx, config_path, **overrides):
    """Build a multilingual parallel name resource from Wikidata dumps."""
    ctx.obj = (config_path, overrides)


def _load_config(ctx) -> PipelineConfig:
    config_path, overrides = ctx.obj
    try:
        cfg = PipelineConfig.from_file(config_path) if config_path else PipelineConfig()
        cfg.apply_overrides(overrides)
        cfg.validate()
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    return cfg


def _config_fail(message: str):
    click.echo(f"config error: {message}", err=True)
    sys.exit(EXIT_CONFIG)


def _require(stage: str, paths) -> None:
    missing = [str(p) for p in paths if not os.path.exists(p)]
    if missing:
        click.echo(f"stage {stage}: missing upstream artifact: {', '.join(missing)}", err=True)
        sys.exit(EXIT_MISSING_INPUT)


def _hash_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _hash_artifact(path) -> dict[str, str]:
    """{relative name: sha256} for a file or every file under a directory."""
    if os.path.isdir(path):
        hashes = {}
        base = os.path.basename(path)
        for root, _dirs, files in os.walk(path):
            for name in sorted(files):
                full = os.path.join(root, name)
                rel = os.path.join(base, os.path.relpath(full, path))
                hashes[rel] = _hash_file(full)
        return hashes
    return {os.path.basename(path): _hash_file(path)}


def _swap_dir(tmp_dir: str, final_dir: str) -> None:
    if os.path.exists(final_dir):
        shutil.rmtree(final_dir)
    os.replace(tmp_dir, final_dir)


def _run_stage(cfg: PipelineConfig, stage: str, inputs, outputs, fn) -> dict:
    """Check inputs, run the stage body, hash artifacts, append the manifest row."""
    _require(stage, inputs)
    os.makedirs(cfg.workdir, exist_ok=True)
    started = time.time()
    try:
        counters = fn() or {}
    except SystemExit:
        raise
    except Exception as exc:
        click.echo(f"stage {stage} failed: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    wall = time.time() - started
    row = {
        "stage": stage,
        "inputs": {k: v for p in inputs for k, v in _hash_artifact(p).items()},
        "outputs": {k: v for p in outputs for k, v in _hash_artifact(p).items()},
        "counters": counters,
        "config": cfg.as_dict(),
        "wall_time_s": round(wall, 3),
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    with open(os.path.join(cfg.workdir, MANIFEST), "a", encoding="utf-8") as f:
        f.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
    summary = " ".join(f"{k}={v}" for k, v in counters.items())
    click.echo(f"[{stage}] done in {wall:.2f}s {summary}", err=True)
    return counters


def _workpath(cfg: PipelineConfig, name: str) -> str:
    return os.path.join(cfg.workdir, name)


# ---------------------------------------------------------------------------
# stage bodies
# ---------------------------------------------------------------------------

def _stage_ingest(cfg: PipelineConfig) -> dict:
    from .ingest import IngestCounters, open_dump, parse_dump_stream

    out_path = _workpath(cfg, RECORDS)
    counters = IngestCounters()
    tmp = out_path + ".tmp"
    with open_dump(cfg.dump) as stream, open(tmp, "w", encoding="utf-8") as out:
        for record in parse_dump_stream(stream, counters=counters):
            out.write(record.to_json_line())
            out.write("\n")
    os.replace(tmp, out_path)
    return counters.as_dict()


def _stage_build_store(cfg: PipelineConfig) -> dict:
    from .records import iter_records_jsonl
    from .store import Store

    tmp_dir = _workpath(cfg, STORE_DIR) + ".tmp"
    if os.path.exists(tmp_dir):
        shutil.rmtree(tmp_dir)
    store = Store.build(iter_records_jsonl(_workpath(cfg, RECORDS)), tmp_dir)
    edges = len(store.class_graph())
    store.close()
    _swap_dir(tmp_dir, _workpath(cfg, STORE_DIR))
    return {"records": len(store), "classgraph_edges": edges}


def _stage_typeinfer(cfg: PipelineConfig) -> dict:
    from .entity_types import MODE_DISAMBIGUATE, classify, disambiguate
    from .records import TypedName
    from .store import Store, descendants

    counters = Counter()
    out_path = _workpath(cfg, TYPED)
    tmp = out_path + ".tmp"
    with Store(_workpath(cfg, STORE_DIR)) as store:
        graph = store.class_graph()
        per_set = descendants(graph, cfg.per_root)
        loc_set = descendants(graph, cfg.loc_root)
        org_set = descendants(graph, cfg.org_root)
        with open(tmp, "w", encoding="utf-8") as out:
            for record in store.iter_records():
                types = classify(record, per_set, loc_set, org_set)
                if types is None:
                    counters["entities_untyped"] += 1
                    continue
                counters["entities_typed"] += 1
                if len(types) > 1:
                    counters["entities_multi_type"] += 1
                if cfg.mode == MODE_DISAMBIGUATE:
                    types = frozenset({disambiguate(types)})
                for code in sorted(record.labels):
                    out.write(TypedName(record.qid, code, record.labels[code], types).to_json_line())
                    out.write("\n")
                    counters["names"] += 1
    os.replace(tmp, out_path)
    return dict(counters)


def _stage_clean(cfg: PipelineConfig) -> dict:
    from .cleanup import strip_parentheticals_ex
    from .records import TypedName, iter_names_jsonl

    counters = Counter()
    out_path = _workpath(cfg, CLEANED)
    tmp = out_path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as out:
        for name in iter_names_jsonl(_workpath(cfg, TYPED)):
            counters["names"] += 1
            cleaned, unbalanced = strip_parentheticals_ex(name.label)
            if unbalanced:
                counters["unbalanced_parentheses"] += 1
            if not cleaned:
                counters["dropped_empty_after_cleanup"] += 1
                continue
            if cleaned != name.label:
                counters["labels_changed"] += 1
                name = TypedName(name.qid, name.language, cleaned, name.types)
            out.write(name.to_json_line())
            out.write("\n")
    os.replace(tmp, out_path)
    return dict(counters)


def _stage_filter_scripts(cfg: PipelineConfig) -> dict:
    from .records import iter_names_jsonl
    from .scripts import (
        FilterCounters,
        build_profiles,
        iter_script_filter,
        load_allowed_scripts,
        write_entropy_report,
    )

    allowed = load_allowed_scripts(cfg.allowed_scripts or None)
    counters = FilterCounters()
    kept, removed = [], []
    for name, keep in iter_script_filter(
        iter_names_jsonl(_workpath(cfg, CLEANED)), allowed, counters=counters
    ):
        (kept if keep else removed).append(name)

    for names, artifact in ((kept, KEPT), (removed, REMOVED)):
        tmp = _workpath(cfg, artifact) + ".tmp"
        with open(tmp, "w", encoding="utf-8") as out:
            for name in names:
                out.write(name.to_json_line())
                out.write("\n")
        os.replace(tmp, _workpath(cfg, artifact))

    before = build_profiles(kept + removed, mode=cfg.profile)
    after = build_profiles(kept, mode=cfg.profile)
    report_tmp = _workpath(cfg, ENTROPY_REPORT) + ".tmp"
    macro = write_entropy_report(report_tmp, before, after)
    os.replace(report_tmp, _workpath(cfg, ENTROPY_REPORT))

    result = counters.as_dict()
    result["macro_entropy_before"] = round(macro[0], 4)
    result["macro_entropy_after"] = round(macro[1], 4)
    return result


def _make_romanizer(cfg: PipelineConfig):
    from .reorder import ExternalRomanizer, TableRomanizer, load_romanization_tables

    if cfg.external_romanizer:
        return ExternalRomanizer(cfg.external_romanizer)
    return TableRomanizer(load_romanization_tables(cfg.romanization_sources()))


def _stage_reorder(cfg: PipelineConfig) -> dict:
    from .records import iter_names_jsonl
    from .reorder import collect_english_labels, reorder_corpus, write_decisions_tsv

    names = list(iter_names_jsonl(_workpath(cfg, KEPT)))
    english = collect_english_labels(names)
    romanizer = _make_romanizer(cfg)
    try:
        out_names, decisions, stats = reorder_corpus(
            names, english, romanizer, max_tokens=cfg.max_tokens, workers=cfg.workers
        )
    finally:
        romanizer.close()

    tmp = _workpath(cfg, REORDERED) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as out:
        for name in out_names:
            out.write(name.to_json_line())
            out.write("\n")
    os.replace(tmp, _workpath(cfg, REORDERED))

    decisions_tmp = _workpath(cfg, DECISIONS) + ".tmp"
    write_decisions_tsv(decisions_tmp, decisions)
    os.replace(decisions_tmp, _workpath(cfg, DECISIONS))
    return stats.as_dict()


def _stage_emit(cfg: PipelineConfig, gzip_copies: bool = False) -> dict:
    from .emit import drop_singleton_languages, emit_resource, write_gzip_copies
    from .records import iter_names_jsonl

    tmp_dir = _workpath(cfg, RESOURCE_DIR) + ".tmp"
    if os.path.exists(tmp_dir):
        shutil.rmtree(tmp_dir)
    kept, dropped = drop_singleton_languages(iter_names_jsonl(_workpath(cfg, REORDERED)))
    summary = emit_resource(kept, tmp_dir)
    if gzip_copies:
        summary["gzip_files"] = len(write_gzip_copies(tmp_dir))
    _swap_dir(tmp_dir, _workpath(cfg, RESOURCE_DIR))
    summary["singleton_languages_dropped"] = len(dropped)
    return summary


def _stage_plan(cfg: PipelineConfig) -> dict:
    """Stage name -> (input paths, output paths, body); shared by `all`."""
    def w(name: str) -> str:
        return _workpath(cfg, name)

    return {
        "ingest": ([cfg.dump], [w(RECORDS)], lambda: _stage_ingest(cfg)),
        "build-store": ([w(RECORDS)], [w(STORE_DIR)], lambda: _stage_build_store(cfg)),
        "typeinfer": ([w(STORE_DIR)], [w(TYPED)], lambda: _stage_typeinfer(cfg)),
        "clean": ([w(TYPED)], [w(CLEANED)], lambda: _stage_clean(cfg)),
        "filter-scripts": ([w(CLEANED)], [w(KEPT), w(REMOVED), w(ENTROPY_REPORT)],
                           lambda: _stage_filter_scripts(cfg)),
        "reorder": ([w(KEPT)], [w(REORDERED), w(DECISIONS)], lambda: _stage_reorder(cfg)),
        "emit": ([w(REORDERED)], [w(RESOURCE_DIR)], lambda: _stage_emit(cfg)),
    }


def _run_named_stage(cfg: PipelineConfig, name: str) -> None:
    if name == "ingest" and not cfg.dump:
        _config_fail("paths.dump is required for ingest")
    inputs, outputs, body = _stage_plan(cfg)[name]
    _run_stage(cfg, name, inputs, outputs, body)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

@main.command()
@click.pass_context
def ingest(ctx):
    """Parse the dump into canonical records.jsonl."""
    _run_named_stage(_load_config(ctx), "ingest")


@main.command("build-store")
@click.pass_context
def build_store(ctx):
    """Index records and assemble the subclass graph."""
    _run_named_stage(_load_config(ctx), "build-store")


@main.command()
@click.pass_context
def typeinfer(ctx):
    """Assign PER/LOC/ORG types and expand labels into typed name rows."""
    _run_named_stage(_load_config(ctx), "typeinfer")


@main.command()
@click.pass_context
def clean(ctx):
    """Strip parenthesized disambiguators from labels."""
    _run_named_stage(_load_config(ctx), "clean")


@main.command("filter-scripts")
@click.pass_context
def filter_scripts(ctx):
    """Drop names whose majority script a language does not allow."""
    _run_named_stage(_load_config(ctx), "filter-scripts")


@main.command()
@click.pass_context
def reorder(ctx):
    """Normalize PER name token order toward the English order."""
    _run_named_stage(_load_config(ctx), "reorder")


@main.command()
@click.option("--gzip", "gzip_copies", is_flag=True,
              help="also write deterministic .tsv.gz copies for release packaging")
@click.pass_context
def emit(ctx, gzip_copies):
    """Write the per-type resource TSVs and the summary."""
    cfg = _load_config(ctx)
    if not gzip_copies:
        _run_named_stage(cfg, "emit")
        return
    inputs, outputs, _body = _stage_plan(cfg)["emit"]
    _run_stage(cfg, "emit", inputs, outputs, lambda: _stage_emit(cfg, gzip_copies=True))


@main.command()
@click.pass_context
def stats(ctx):
    """Type census and per-language name counts from the typed rows."""
    cfg = _load_config(ctx)

    def run() -> dict:
        from .entity_types import type_census, write_census_tsv
        from .records import iter_names_jsonl

        types_by_qid: dict[str, frozenset] = {}
        language_counts: Counter = Counter()
        for name in iter_names_jsonl(_workpath(cfg, TYPED)):
            types_by_qid[name.qid] = name.types
            language_counts[name.language] += 1
        rows = type_census(types_by_qid.values())
        census_tmp = _workpath(cfg, CENSUS) + ".tmp"
        write_census_tsv(rows, census_tmp)
        os.replace(census_tmp, _workpath(cfg, CENSUS))
        counts_tmp = _workpath(cfg, LANGUAGE_COUNTS) + ".tmp"
        with open(counts_tmp, "w", encoding="utf-8") as f:
            for language, count in sorted(language_counts.items(), key=lambda kv: (-kv[1], kv[0])):
                f.write(f"{language}\t{count}\n")
        os.replace(counts_tmp, _workpath(cfg, LANGUAGE_COUNTS))
        return {"entities": len(types_by_qid), "languages": len(language_counts)}

    outputs = [_workpath(cfg, CENSUS), _workpath(cfg, LANGUAGE_COUNTS)]
    _run_stage(cfg, "stats", [_workpath(cfg, TYPED)], outputs, run)


@main.command()
@click.option("--system", "system_path", default=None, metavar="FILE",
              help="score this output file (one label per line) against the gold set")
@click.option("--bins", default=20, show_default=True, help="MCA histogram bin count")
@click.option("--make-bitext", is_flag=True,
              help="write aligner bitext from the kept names instead of scoring")
@click.pass_context
def evaluate(ctx, system_path, bins, make_bitext):
    """Score reordering against a gold set, or compute MCA from alignments.

    With paths.gold set: evaluates the no-action baseline, the built-in
    edit-distance reorderer (for gold rows that carry an English reference
    column), and optionally a --system output file. With paths.alignments
    set: computes per-language mean crossing alignments and a histogram.
    """
    cfg = _load_config(ctx)

    if make_bitext:
        def run_bitext() -> dict:
            from .aligneval import write_bitext
            from .records import iter_names_jsonl
            from .reorder import collect_english_labels

            names = list(iter_names_jsonl(_workpath(cfg, KEPT)))
            english = collect_english_labels(names)
            bitext = _workpath(cfg, "bitext.txt")
            langs = _workpath(cfg, "bitext_languages.txt")
            written = write_bitext(names, english, bitext + ".tmp", langs + ".tmp")
            os.replace(bitext + ".tmp", bitext)
            os.replace(langs + ".tmp", langs)
            return {"bitext_lines": written}

        outputs = [_workpath(cfg, "bitext.txt"), _workpath(cfg, "bitext_languages.txt")]
        _run_stage(cfg, "evaluate", [_workpath(cfg, KEPT)], outputs, run_bitext)
        return

    if cfg.alignments:
        def run_mca() -> dict:
            from .aligneval import (
                count_aligned,
                mean_crossing_alignments,
                parse_alignment_line,
                write_mca_histogram,
                write_mca_report,
            )

            languages = []
            if cfg.languages:
                with open(cfg.languages, "r", encoding="utf-8") as f:
                    languages = [line.strip() for line in f]
            by_language: dict[str, list] = {}
            counters = {"parsed": 0, "skipped_malformed": 0}
            with open(cfg.alignments, "r", encoding="utf-8") as f:
                for i, line in enumerate(f):
                    graph = parse_alignment_line(line.rstrip("\n"))
                    if graph is None:
                        counters["skipped_malformed"] += 1
                        continue
                    counters["parsed"] += 1
                    language = languages[i] if i < len(languages) else "all"
                    by_language.setdefault(language, []).append(graph)
            mca = mean_crossing_alignments(by_language)
            aligned_counts, unaligned = count_aligned(by_language)
            counters["unaligned_names"] = unaligned
            report = _workpath(cfg, "mca_report.tsv")
            hist = _workpath(cfg, "mca_histogram.tsv")
            write_mca_report(report + ".tmp", mca, aligned_counts)
            os.replace(report + ".tmp", report)
            write_mca_histogram(hist + ".tmp", mca, bins=bins)
            os.replace(hist + ".tmp", hist)
            return counters

        outputs = [_workpath(cfg, "mca_report.tsv"), _workpath(cfg, "mca_histogram.tsv")]
        _run_stage(cfg, "evaluate", [cfg.alignments], outputs, run_mca)
        return

    if not cfg.gold:
        _config_fail("evaluate needs paths.gold or paths.alignments (or --make-bitext)")

    def run_gold() -> dict:
        from .aligneval import evaluate_reordering, read_gold_tsv
        from .reorder import reorder_name

        gold = read_gold_tsv(cfg.gold)
        references = _gold_references(cfg.gold)
        baseline = evaluate_reordering([g.input_label for g in gold], gold)
        click.echo(f"baseline      {baseline.formatted()}")
        counters = {
            "examples": baseline.examples,
            "baseline_accuracy": round(baseline.accuracy, 1),
            "baseline_mean_f1": round(baseline.mean_f1, 1),
        }
        if all(references):
            romanizer = _make_romanizer(cfg)
            try:
                outputs = [
                    reorder_name(g.input_label, ref, romanizer, cfg.max_tokens).chosen
                    for g, ref in zip(gold, references)
                ]
            finally:
                romanizer.close()
            system = evaluate_reordering(outputs, gold)
            click.echo(f"edit-distance {system.formatted()}")
            counters["system_accuracy"] = round(system.accuracy, 1)
            counters["system_mean_f1"] = round(system.mean_f1, 1)
        else:
            click.echo("edit-distance skipped: gold file has no English reference column", err=True)
        if system_path:
            with open(system_path, "r", encoding="utf-8") as f:
                lines = [line.rstrip("\n") for line in f]
            supplied = evaluate_reordering(lines, gold)
            click.echo(f"system file   {supplied.formatted()}")
            counters["file_accuracy"] = round(supplied.accuracy, 1)
            counters["file_mean_f1"] = round(supplied.mean_f1, 1)
        return counters

    inputs = [cfg.gold] + ([system_path] if system_path else [])
    _run_stage(cfg, "evaluate", inputs, [], run_gold)


def _gold_references(path) -> list[str]:
    """Optional 5th column of a gold file: the English reference per example."""
    references = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            references.append(parts[4] if len(parts) > 4 else "")
    return references


@main.command()
@click.argument("qid")
@click.option("--output", "-o", default=None, metavar="FILE",
              help="append the canonical record line here instead of stdout")
@click.pass_context
def fetch(ctx, qid, output):
    """Fetch one entity over HTTP and print its canonical record line."""
    cfg = _load_config(ctx)
    from .ingest import FetchError, fetch_entity

    try:
        record = fetch_entity(qid, endpoint=cfg.resolved_endpoint())
    except ValueError as exc:
        _config_fail(str(exc))
    except FetchError as exc:
        click.echo(f"fetch failed: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    line = record.to_json_line()
    if output:
        with open(output, "a", encoding="utf-8") as f:
            f.write(line + "\n")
    else:
        click.echo(line)


@main.command("all")
@click.pass_context
def run_all(ctx):
    """Run the full pipeline: ingest through emit in canonical order."""
    cfg = _load_config(ctx)
    for name in ALL_STAGES:
        _run_named_stage(cfg, name)


if __name__ == "__main__":
    main()
