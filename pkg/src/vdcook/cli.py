"""Command-line entry point.

Outputs are canonical JSON on stdout, diagnostics on stderr. Exit codes:
0 ok, 1 operational failure, 2 usage or parse error, 3 integrity failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .canonical import canonical_dumps
from .engine import Engine
from .errors import ValidationError, VdcookError
from .fixtures import build_fixture_corpus
from .ingestion import FetchItem, SourceDescriptor
from .model import CookRequest, Manifest, Prefilters
from .stats import summary_table

EXIT_OK = 0
EXIT_OPERATIONAL = 1
EXIT_USAGE = 2
EXIT_INTEGRITY = 3


def _emit(obj) -> None:
    click.echo(canonical_dumps(obj))


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
@click.option("--store", envvar="VDCOOK_STORE", default="store",
              show_default=True, help="Store root directory.")
@click.option("--packages", envvar="VDCOOK_PACKAGES", default=None,
              help="Package output directory (default: <store>/../packages).")
@click.option("--synonyms", envvar="VDCOOK_SYNONYMS", default=None,
              help="Path to a JSON synonym-set file for query expansion.")
@click.pass_context
def main(ctx, store, packages, synonyms):
    """vdcook: cook reproducible video dataset packages."""
    ctx.obj = {"store": store, "packages": packages, "synonyms": synonyms}


def _engine(ctx) -> Engine:
    cfg = ctx.obj
    return Engine(cfg["store"], packages_root=cfg["packages"],
                  synonyms_path=cfg["synonyms"])


@main.command()
@click.option("--source", "source_id", required=True, help="Source id to use.")
@click.option("--register-local-dir", default=None,
              help="Register SOURCE as a local_dir connector rooted here first.")
@click.option("--register-json", default=None,
              help="Register SOURCE from a full JSON descriptor first.")
@click.option("--file", "files", multiple=True, type=click.Path(exists=True),
              help="Upload these container files instead of crawling.")
@click.pass_context
def ingest(ctx, source_id, register_local_dir, register_json, files):
    """Crawl a source, or push uploaded container files through it."""
    engine = _engine(ctx)
    try:
        if register_local_dir:
            engine.ingestor.register_source(SourceDescriptor(
                source_id, "local_dir", {"root": register_local_dir}))
        elif register_json:
            try:
                desc = SourceDescriptor.from_dict(json.loads(register_json))
            except (ValueError, KeyError) as exc:
                _fail(f"bad source descriptor: {exc}", EXIT_USAGE)
            engine.ingestor.register_source(desc)
        if files:
            items = [FetchItem(Path(f).read_bytes(), f"file://{Path(f).resolve()}",
                               "unknown") for f in files]
            results = engine.ingestor.ingest_batch(source_id, items)
        else:
            results = engine.crawl_source(source_id)
    except VdcookError as exc:
        _fail(str(exc), EXIT_OPERATIONAL)
    _emit({"source_id": source_id,
           "results": [{"clip_id": r.clip_id, "accepted": r.accepted,
                        "reason": r.reason} for r in results],
           "accepted": sum(1 for r in results if r.accepted)})


@main.command()
@click.pass_context
def enrich(ctx):
    """Enrich every raw clip: scene split, motion, OCR, caption, tags."""
    engine = _engine(ctx)
    outcomes = engine.enrich_pending()
    _emit({
        "processed": len(outcomes),
        "enriched": sum(len(o.enriched_ids) for o in outcomes),
        "split_parents": sum(1 for o in outcomes if o.action == "split"),
        "dropped_short": sum(o.dropped_short for o in outcomes),
    })


@main.command()
@click.pass_context
def index(ctx):
    """Add every enriched clip to the attribute and vector indices."""
    engine = _engine(ctx)
    _emit({"indexed": engine.index_pending(), "total": len(engine.index)})


def _request_from_flags(query, scale, ratio, threshold, seed, source_mode,
                        policy, min_duration, max_duration, languages,
                        exclude_flags) -> CookRequest:
    prefilters = Prefilters(
        min_duration_s=min_duration,
        max_duration_s=max_duration,
        languages="any" if not languages else frozenset(languages),
        excluded_safety_flags=frozenset(exclude_flags),
    )
    return CookRequest(query=query, scale=scale, retrieval_ratio=ratio,
                       quality_threshold=threshold, seed=seed,
                       prefilters=prefilters, source_mode=source_mode,
                       shortfall_policy=policy)


@main.command()
@click.option("--query", default=None, help="Natural-language query.")
@click.option("--scale", default=10, show_default=True, type=int)
@click.option("--ratio", default=1.0, show_default=True, type=float,
              help="Retrieval fraction; the rest is synthesized.")
@click.option("--threshold", default=0.0, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--source-mode", default="hybrid", show_default=True,
              type=click.Choice(["crawled", "uploaded", "hybrid"]))
@click.option("--policy", default="fail", show_default=True,
              type=click.Choice(["fail", "backfill_synthesis", "truncate"]))
@click.option("--min-duration", default=2.0, show_default=True, type=float)
@click.option("--max-duration", default=None, type=float)
@click.option("--language", "languages", multiple=True)
@click.option("--exclude-flag", "exclude_flags", multiple=True)
@click.option("--request-json", default=None,
              help="Full CookRequest as canonical JSON; overrides the flags.")
@click.option("--out", default=None, help="Package output directory.")
@click.pass_context
def cook(ctx, query, scale, ratio, threshold, seed, source_mode, policy,
         min_duration, max_duration, languages, exclude_flags,
         request_json, out):
    """Cook a dataset package from the indexed corpus."""
    if out:
        ctx.obj["packages"] = out
    engine = _engine(ctx)
    if request_json:
        try:
            request = CookRequest.from_dict(json.loads(request_json))
        except (ValueError, KeyError, ValidationError) as exc:
            _fail(f"bad request json: {exc}", EXIT_USAGE)
    elif query:
        try:
            request = _request_from_flags(query, scale, ratio, threshold, seed,
                                          source_mode, policy, min_duration,
                                          max_duration, languages, exclude_flags)
        except ValidationError as exc:
            _fail(str(exc), EXIT_USAGE)
    else:
        _fail("either --query or --request-json is required", EXIT_USAGE)
    try:
        manifest = engine.cook(request)
    except VdcookError as exc:
        _fail(str(exc), EXIT_OPERATIONAL)
    _emit({
        "job_id": manifest.job_id,
        "manifest_path": str(engine.packages_root / manifest.job_id / "manifest.json"),
        "counts": {"retrieved": manifest.retrieved_count,
                   "synthesized": manifest.synthesized_count,
                   "dropped_by_policy": manifest.dropped_by_policy},
    })


@main.command()
@click.option("--table", is_flag=True, help="Aligned text table instead of JSON.")
@click.option("--sample-n", default=None, type=int,
              help="Aggregate over a seeded random sample of this size.")
@click.option("--sample-seed", default=0, show_default=True, type=int)
@click.pass_context
def stats(ctx, table, sample_n, sample_seed):
    """Corpus summary statistics over the indexed clips."""
    engine = _engine(ctx)
    sampling = None
    if sample_n is not None:
        sampling = {"mode": "random_n", "n": sample_n, "seed": sample_seed}
    try:
        summary = engine.corpus_summary(sampling)
    except VdcookError as exc:
        _fail(str(exc), EXIT_OPERATIONAL)
    if table:
        click.echo(summary_table(summary))
    else:
        _emit(summary.to_dict())


@main.command()
@click.option("--floor", required=True, type=int)
@click.option("--tag", "tags", multiple=True,
              help="Restrict the report to these tags.")
@click.pass_context
def coverage(ctx, floor, tags):
    """Per-tag clip counts and deficits against a coverage floor."""
    engine = _engine(ctx)
    report = engine.coverage(floor, set(tags) or None)
    _emit(report.to_dict())


@main.command()
@click.option("--floor", required=True, type=int)
@click.option("--per-tag-batch", default=10, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--tag", "tags", multiple=True)
@click.pass_context
def amplify(ctx, floor, per_tag_batch, seed, tags):
    """Synthesize and reinject clips for tags below the coverage floor."""
    engine = _engine(ctx)
    try:
        report, new_ids = engine.amplify(floor, per_tag_batch, seed,
                                         set(tags) or None)
    except VdcookError as exc:
        _fail(str(exc), EXIT_OPERATIONAL)
    _emit({"report": report.to_dict(), "new_clip_ids": new_ids})


@main.command()
@click.argument("manifest_path", type=click.Path())
@click.pass_context
def replay(ctx, manifest_path):
    """Re-execute a manifest's request and compare byte for byte."""
    path = Path(manifest_path)
    if not path.exists():
        _fail(f"no such manifest: {path}", EXIT_USAGE)
    try:
        manifest = Manifest.from_dict(json.loads(path.read_text(encoding="utf-8")))
    except (ValueError, KeyError, TypeError, ValidationError) as exc:
        _fail(f"manifest does not parse: {exc}", EXIT_USAGE)
    engine = _engine(ctx)
    missing = [e.clip_id for e in manifest.entries
               if e.channel == "retrieved" and not engine.store.has_clip(e.clip_id)]
    if missing:
        click.echo("missing clips:", err=True)
        for cid in missing:
            click.echo(f"  {cid}", err=True)
        sys.exit(EXIT_INTEGRITY)
    try:
        _, identical, diff = engine.replay(manifest)
    except VdcookError as exc:
        _fail(str(exc), EXIT_OPERATIONAL)
    if identical:
        _emit({"status": "ok", "job_id": manifest.job_id})
        sys.exit(EXIT_OK)
    click.echo("regenerated manifest differs:", err=True)
    for line in diff:
        click.echo(f"  {line}", err=True)
    sys.exit(EXIT_OPERATIONAL)


@main.command("gen-fixtures")
@click.option("--seed", default=7, show_default=True, type=int)
@click.pass_context
def gen_fixtures(ctx, seed):
    """Build the deterministic 200-clip fixture corpus into the store."""
    engine = _engine(ctx)
    try:
        facts = build_fixture_corpus(engine, seed=seed)
    except VdcookError as exc:
        _fail(str(exc), EXIT_OPERATIONAL)
    _emit(facts)


@main.command()
@click.option("--listen", envvar="VDCOOK_LISTEN", default="127.0.0.1:8320",
              show_default=True)
@click.option("--workers", envvar="VDCOOK_WORKERS", default=2,
              show_default=True, type=int)
@click.option("--console", "console_dir", envvar="VDCOOK_CONSOLE",
              default=None, help="Web console directory to serve at / "
              "(default: ./frontend when it exists).")
@click.pass_context
def serve(ctx, listen, workers, console_dir):
    """Run the HTTP service (REST + SSE job progress)."""
    import uvicorn

    from .service import create_app

    if console_dir is None and Path("frontend/index.html").exists():
        console_dir = "frontend"
    engine = _engine(ctx)
    app = create_app(engine, workers=workers, static_dir=console_dir)
    host, _, port = listen.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8320),
                log_level="info")


if __name__ == "__main__":
    main()
