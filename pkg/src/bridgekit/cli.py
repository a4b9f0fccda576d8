"""Operator entry point: run pipelines, score dumps, produce analyses.

Exit codes: 0 success, 1 usage error, 2 data error, 3 backend exhaustion.
"""

from __future__ import annotations

import json
import logging
import sys
import time

import click

from . import analysis as analysis_mod
from . import evaluation
from .config import AppConfig, ConfigError, build_manifest, load_config
from .corpus import CorpusError, load_corpus
from .gateway import BackendError, Gateway, HttpBackend, QueryCache, ScriptedMockBackend
from .pipeline import (
    run_basic,
    run_basic_subtype,
    run_end_to_end,
    read_predictions,
    write_predictions,
)
from .plots import render_report_figures

logger = logging.getLogger(__name__)

SETTINGS = ("end_to_end", "basic", "basic_subtype")

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_BACKEND = 3


class DataError(click.ClickException):
    exit_code = EXIT_DATA


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
def cli(verbose):
    """Referential bridging resolution pipeline, scorer and analyzer."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _make_backend(backend_spec, app: AppConfig):
    if backend_spec is None:
        backend_spec = "http" if app.backend.endpoint else None
    if backend_spec is None:
        raise click.UsageError(
            "no backend configured: set backend.endpoint in the config or "
            "pass --backend http|mock:<script.json>"
        )
    if backend_spec == "http":
        if not app.backend.endpoint:
            raise click.UsageError("http backend requires backend.endpoint in config")
        return HttpBackend(app.backend), "http"
    if backend_spec.startswith("mock:"):
        script_path = backend_spec[len("mock:") :]
        try:
            return ScriptedMockBackend.from_file(script_path), f"mock:{script_path}"
        except OSError as exc:
            raise DataError(f"cannot read mock script: {exc}")
    raise click.UsageError(f"unknown backend {backend_spec!r}")


@cli.command("run")
@click.option("--setting", type=click.Choice(SETTINGS), required=True)
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--backend", "backend_spec", default=None, help="http or mock:<script.json>")
@click.option("--no-cache", is_flag=True, help="Bypass the persistent query cache.")
def cmd_run(setting, corpus_path, config_path, out_dir, backend_spec, no_cache):
    """Run a pipeline setting over a corpus; write predictions + manifest."""
    from pathlib import Path

    started = time.time()
    try:
        app = load_config(config_path)
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    try:
        corpus = load_corpus(corpus_path)
    except CorpusError as exc:
        raise DataError(str(exc))

    backend, backend_name = _make_backend(backend_spec, app)
    cache = None if no_cache else QueryCache(app.cache_dir)
    gateway = Gateway(backend, app.backend, cache)
    templates = app.template_set()
    fewshot = app.few_shot()
    cfg = app.pipeline

    needs_gold = setting in ("basic", "basic_subtype")
    if needs_gold and not any(doc.gold_bridging for doc in corpus.documents):
        raise DataError(f"{setting} setting requires gold bridging annotations")

    records = []
    for doc in corpus.documents:
        if setting == "end_to_end":
            records.extend(run_end_to_end(doc, cfg, gateway, templates, fewshot))
        elif setting == "basic":
            anaphors = [doc.mention(b.anaphor_id) for b in doc.gold_bridging]
            records.extend(
                run_basic(doc, anaphors, cfg, gateway, templates, fewshot)
            )
        else:
            pairs = [
                (doc.mention(b.anaphor_id), doc.mention(b.antecedent_id))
                for b in doc.gold_bridging
                if b.antecedent_id is not None
            ]
            records.extend(
                run_basic_subtype(doc, pairs, cfg, gateway, templates, fewshot)
            )

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dump_path = out / "predictions.jsonl"
    write_predictions(records, dump_path)
    query_stats = {"network_calls": gateway.network_calls}
    if cache is not None:
        query_stats.update(cache.stats())
    manifest = build_manifest(
        app, corpus_path, setting, backend_name, started, query_stats
    )
    with open(out / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, ensure_ascii=False)
    click.echo(f"wrote {len(records)} predictions to {dump_path}")


@cli.command("score")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--predictions", "dump_path", required=True, type=click.Path(exists=True))
@click.option("--setting", type=click.Choice(SETTINGS), default="end_to_end")
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option("--strict-antecedent", is_flag=True, help="Span-equality antecedent matching only.")
@click.option("--head-match", is_flag=True, help="Relaxed anaphor matching by head token.")
def cmd_score(corpus_path, dump_path, setting, out_path, strict_antecedent, head_match):
    """Score a prediction dump against gold; print report, optionally save JSON."""
    try:
        corpus = load_corpus(corpus_path)
        predictions = read_predictions(dump_path)
    except (CorpusError, json.JSONDecodeError, KeyError) as exc:
        raise DataError(f"cannot load inputs: {exc}")
    try:
        report = evaluation.EvalReport(
            flags={"strict_antecedent": strict_antecedent, "head_match": head_match}
        )
        if setting == "end_to_end":
            report.recognition = evaluation.score_recognition(
                corpus, predictions, head_match=head_match
            )
            report.resolution = evaluation.score_resolution(
                corpus,
                predictions,
                strict_antecedent=strict_antecedent,
                head_match=head_match,
            )
            if any(b.subtypes for d in corpus.documents for b in d.gold_bridging):
                gold_sets, pred_sets = evaluation.paired_subtype_sets(
                    corpus, predictions, strict_antecedent=strict_antecedent
                )
                report.subtype = evaluation.score_subtypes(gold_sets, pred_sets)
        elif setting == "basic":
            report.basic_accuracy = evaluation.score_basic_accuracy(
                corpus, predictions, strict_antecedent=strict_antecedent
            )
        else:
            gold_sets, pred_sets = evaluation.basic_subtype_sets(corpus, predictions)
            report.subtype = evaluation.score_subtypes(gold_sets, pred_sets)
    except evaluation.ScoringError as exc:
        raise DataError(str(exc))
    click.echo(report.format_table())
    if out_path:
        with open(out_path, "w", encoding="utf-8") as f:
            json.dump(report.to_dict(), f, indent=2, ensure_ascii=False)
        click.echo(f"report written to {out_path}")


@cli.command("analyze")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--predictions", "dump_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--no-plots", is_flag=True, help="Skip figure rendering.")
@click.option("--exact-ks", is_flag=True, help="Exact small-sample KS p-values.")
def cmd_analyze(corpus_path, dump_path, out_dir, no_plots, exact_ks):
    """Error analysis: distances, KS + Holm, chi-square residuals, confusion."""
    from pathlib import Path

    try:
        corpus = load_corpus(corpus_path)
        predictions = read_predictions(dump_path)
    except (CorpusError, json.JSONDecodeError, KeyError) as exc:
        raise DataError(f"cannot load inputs: {exc}")
    report = analysis_mod.analyze(corpus, predictions, exact_ks=exact_ks)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "analysis.json", "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, indent=2, ensure_ascii=False)
    if not no_plots:
        written = render_report_figures(report, out)
        click.echo(f"rendered {len(written)} artifacts in {out}")
    for name, result in report.ks_results.items():
        if isinstance(result, str):
            click.echo(f"KS {name}: {result}")
        else:
            click.echo(
                f"KS {name}: D={result.statistic:.4f} p={result.p_value:.4g} "
                f"holm={result.adjusted_p:.4g}"
            )
    if isinstance(report.chi_square, str):
        click.echo(f"chi-square: {report.chi_square}")
    elif report.chi_square is not None:
        cs = report.chi_square
        click.echo(
            f"chi-square: statistic={cs.statistic:.3f} df={cs.df} p={cs.p_value:.4g}"
        )


@cli.group("cache")
def cmd_cache():
    """Inspect or purge the persistent query cache."""


@cmd_cache.command("stats")
@click.option("--cache-dir", required=True, type=click.Path())
def cache_stats(cache_dir):
    cache = QueryCache(cache_dir)
    click.echo(json.dumps(cache.stats()))


@cmd_cache.command("purge")
@click.option("--cache-dir", required=True, type=click.Path())
def cache_purge(cache_dir):
    cache = QueryCache(cache_dir)
    click.echo(f"purged {cache.purge()} cached queries")


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        sys.exit(EXIT_USAGE)
    except DataError as exc:
        exc.show()
        sys.exit(EXIT_DATA)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code if exc.exit_code != 1 else EXIT_USAGE)
    except click.Abort:
        sys.exit(EXIT_USAGE)
    except (CorpusError, evaluation.ScoringError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_DATA)
    except BackendError as exc:
        click.echo(f"backend error: {exc}", err=True)
        sys.exit(EXIT_BACKEND)
    sys.exit(0)


if __name__ == "__main__":
    main()
