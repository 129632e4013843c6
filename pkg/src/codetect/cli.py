"""Command-line entry point.

Each subcommand is a thin layer over the pipeline stages; the same core
functions back the HTTP service. Exit codes: 0 success, 2 validation
error, 3 stage failure, 4 I/O error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import yaml

from . import pipeline as pl
from .evaluation import EvalReport, render_table
from .models import ModelFormatError, SchemaMismatchError
from .samples import IngestError

EXIT_VALIDATION = 2
EXIT_STAGE = 3
EXIT_IO = 4


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_config(config_path, seed, jobs, out, sets) -> pl.RunConfig:
    try:
        config = pl.RunConfig.from_file(config_path) if config_path \
            else pl.RunConfig()
        overrides = {}
        for item in sets:
            if "=" not in item:
                raise pl.ConfigError(f"override {item!r} is not key=value")
            key, raw = item.split("=", 1)
            overrides[key.strip()] = yaml.safe_load(raw)
        config.apply_overrides(overrides)
        if seed is not None:
            config.seed = seed
        if jobs is not None:
            config.jobs = jobs
        if out is not None:
            config.out = out
        return config
    except pl.ConfigError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))


def _common(fn):
    fn = click.option("--config", "config_path", type=click.Path(),
                      default=None, help="YAML/JSON run configuration.")(fn)
    fn = click.option("--seed", type=int, default=None)(fn)
    fn = click.option("--jobs", type=int, default=None)(fn)
    fn = click.option("--out", type=click.Path(), default=None,
                      help="Artifact directory.")(fn)
    fn = click.option("--set", "sets", multiple=True, metavar="KEY=VALUE",
                      help="Dot-path config override.")(fn)
    return fn


def _run_stages(config: pl.RunConfig, with_zeroshot=False, with_explain=False):
    try:
        config.validate()
        return pl.run_pipeline(config, with_zeroshot=with_zeroshot,
                               with_explain=with_explain)
    except pl.ConfigError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except pl.StageError as exc:
        _fail(EXIT_STAGE, str(exc))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))


@click.group()
def main():
    """Detection and attribution of machine-generated program code."""


@main.command("ingest")
@_common
@click.option("--corpus", type=click.Path(), default=None)
def cmd_ingest(config_path, seed, jobs, out, sets, corpus):
    """Read a JSONL corpus and report its shape."""
    config = _load_config(config_path, seed, jobs, out, sets)
    if corpus:
        config.corpus = corpus
    try:
        config.validate()
        paths = pl.RunPaths(config.out)
        paths.root.mkdir(parents=True, exist_ok=True)
        samples = pl.stage_ingest(config, paths)
    except pl.ConfigError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except IngestError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    by_label = {}
    for sample in samples:
        by_label[sample.label] = by_label.get(sample.label, 0) + 1
    click.echo(json.dumps({"samples": len(samples), "labels": by_label}))


@main.command("qa")
@_common
def cmd_qa(config_path, seed, jobs, out, sets):
    """Run quality assurance: strip, length-filter, deduplicate."""
    config = _load_config(config_path, seed, jobs, out, sets)
    try:
        config.validate()
        paths = pl.RunPaths(config.out)
        paths.root.mkdir(parents=True, exist_ok=True)
        samples = pl.stage_ingest(config, paths)
        pl.stage_qa(config, paths, samples)
    except pl.ConfigError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except (pl.StageError, ValueError) as exc:
        _fail(EXIT_STAGE, str(exc))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    click.echo(paths.qa_report.read_text().strip())


@main.command("featurize")
@_common
def cmd_featurize(config_path, seed, jobs, out, sets):
    """QA, split and extract the feature matrices."""
    config = _load_config(config_path, seed, jobs, out, sets)
    try:
        config.validate()
        paths = pl.RunPaths(config.out)
        paths.root.mkdir(parents=True, exist_ok=True)
        samples = pl.stage_ingest(config, paths)
        clean = pl.stage_qa(config, paths, samples)
        assigned = pl.stage_split(config, paths, clean)
        pl.stage_featurize(config, paths, assigned)
    except pl.ConfigError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except (pl.StageError, ValueError) as exc:
        _fail(EXIT_STAGE, str(exc))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    click.echo(f"features written under {config.out}")


@main.command("train")
@_common
def cmd_train(config_path, seed, jobs, out, sets):
    """Train the configured tabular model."""
    config = _load_config(config_path, seed, jobs, out, sets)
    try:
        config.validate()
        paths = pl.RunPaths(config.out)
        paths.root.mkdir(parents=True, exist_ok=True)
        samples = pl.stage_ingest(config, paths)
        clean = pl.stage_qa(config, paths, samples)
        assigned = pl.stage_split(config, paths, clean)
        _, matrices, schema = pl.stage_featurize(config, paths, assigned)
        pl.stage_train(config, paths, matrices, schema)
    except pl.ConfigError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except (pl.StageError, ValueError) as exc:
        _fail(EXIT_STAGE, str(exc))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    click.echo(f"model written to {paths.model}")


@main.command("evaluate")
@_common
@click.option("--predictions", type=click.Path(exists=True), default=None,
              help="Score an existing predictions JSONL instead of running "
                   "the pipeline.")
@click.option("--task", type=click.Choice(["binary", "attribution", "ternary"]),
              default=None)
def cmd_evaluate(config_path, seed, jobs, out, sets, predictions, task):
    """Full run ending in an evaluation report (or score a predictions file)."""
    if predictions:
        try:
            _, golds, preds, _ = pl.read_predictions(predictions)
            label_space = sorted(set(golds) | set(preds))
            report = EvalReport.from_results(task or "binary", preds, golds,
                                             label_space)
        except OSError as exc:
            _fail(EXIT_IO, str(exc))
        except (ValueError, KeyError) as exc:
            _fail(EXIT_VALIDATION, f"bad predictions file: {exc}")
        click.echo(report.to_json())
        return
    config = _load_config(config_path, seed, jobs, out, sets)
    if task:
        config.task = task
    manifest = _run_stages(config)
    click.echo(json.dumps(manifest["overall"]))
    click.echo(render_table(EvalReport(**json.loads(
        pl.RunPaths(config.out).eval_report.read_text()))))


@main.command("attribute")
@_common
def cmd_attribute(config_path, seed, jobs, out, sets):
    """Authorship attribution: evaluate with the multiclass label space."""
    config = _load_config(config_path, seed, jobs, out, sets)
    config.task = "attribution"
    manifest = _run_stages(config)
    click.echo(json.dumps(manifest["overall"]))


@main.command("explain")
@_common
def cmd_explain(config_path, seed, jobs, out, sets):
    """Feature importance for the configured model."""
    config = _load_config(config_path, seed, jobs, out, sets)
    _run_stages(config, with_explain=True)
    paths = pl.RunPaths(config.out)
    click.echo(paths.importance.read_text().strip())


@main.command("zeroshot")
@_common
def cmd_zeroshot(config_path, seed, jobs, out, sets):
    """Curvature-baseline detection over the configured corpus."""
    config = _load_config(config_path, seed, jobs, out, sets)
    _run_stages(config, with_zeroshot=True)
    paths = pl.RunPaths(config.out)
    click.echo(paths.zeroshot_report.read_text().strip())


@main.command("predict")
@click.option("--model", "model_path", type=click.Path(exists=True),
              required=True)
@click.option("--language", required=True)
@click.option("--code", default=None, help="Inline code snippet.")
@click.option("--input", "input_path", type=click.Path(exists=True),
              default=None, help="File containing the code.")
def cmd_predict(model_path, language, code, input_path):
    """Classify one snippet with a trained model; JSON on stdout."""
    from .lexer import SUPPORTED_LANGUAGES, is_supported

    if code is None and input_path is None:
        _fail(EXIT_VALIDATION, "provide --code or --input")
    if not is_supported(language):
        _fail(EXIT_VALIDATION,
              f"unsupported language {language!r}; supported: "
              f"{', '.join(SUPPORTED_LANGUAGES)}")
    text = code if code is not None else Path(input_path).read_text("utf-8")
    try:
        result = pl.predict_single(model_path, text, language)
    except (ModelFormatError, SchemaMismatchError, ValueError) as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    click.echo(json.dumps(result))


@main.command("serve")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def cmd_serve(host, port):
    """Run the HTTP service wrapping the toolkit."""
    import uvicorn

    uvicorn.run("codetect.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
