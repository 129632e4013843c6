"""Declarative run configuration and the staged pipeline.

A run is: ingest -> qa -> split -> featurize -> train -> evaluate, with
optional zeroshot and explain stages. Every artifact embeds the config
digest; reruns with the same config are byte-identical except for the
manifest timestamp. Stage functions are idempotent and skip nothing: each
command rebuilds from its inputs so a changed config never reuses stale
artifacts.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import features as features_mod
from . import qa as qa_mod
from . import splits as splits_mod
from . import stylometry, zeroshot
from .evaluation import EvalReport, OodProtocol, ood_split, render_table, task_label
from .explain import gain_importance, permutation_importance
from .models import (
    GbdtConfig,
    LinearConfig,
    TrainedModel,
    load_model,
    predict,
    save_model,
    train_gbdt,
    train_linear,
)
from .samples import CodeSample, ingest, write_jsonl


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"stage {stage}: {message}")


@dataclass
class RunConfig:
    corpus: str = ""
    out: str = "run-artifacts"
    seed: int = 0
    jobs: int = 1
    task: str = "binary"
    qa: dict = field(default_factory=dict)
    split: dict = field(default_factory=dict)
    features: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    eval: dict = field(default_factory=dict)
    zeroshot: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        try:
            data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"unreadable config: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config root must be a mapping")
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def apply_overrides(self, overrides: dict) -> None:
        """Dot-path overrides, e.g. {"model.trees": 100}."""
        for dotted, value in overrides.items():
            parts = dotted.split(".")
            if parts[0] not in self.__dataclass_fields__:
                raise ConfigError(f"unknown config key {dotted!r}")
            if len(parts) == 1:
                setattr(self, parts[0], value)
                continue
            target = getattr(self, parts[0])
            if not isinstance(target, dict):
                raise ConfigError(f"{parts[0]} does not take nested keys")
            cursor = target
            for part in parts[1:-1]:
                cursor = cursor.setdefault(part, {})
            cursor[parts[-1]] = value

    def to_dict(self) -> dict:
        return {
            "corpus": self.corpus,
            "out": self.out,
            "seed": self.seed,
            "jobs": self.jobs,
            "task": self.task,
            "qa": self.qa,
            "split": self.split,
            "features": self.features,
            "model": self.model,
            "eval": self.eval,
            "zeroshot": self.zeroshot,
        }

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    # -- validated views -------------------------------------------------

    def validate(self, need_corpus: bool = True) -> None:
        if need_corpus:
            if not self.corpus:
                raise ConfigError("corpus path is required")
            if not Path(self.corpus).exists():
                raise ConfigError(f"corpus file not found: {self.corpus}")
        if self.task not in ("binary", "attribution", "ternary"):
            raise ConfigError(f"unknown task {self.task!r}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        try:
            self.qa_config()
            self.split_plan()
            self.model_config()
            self.eval_protocol()
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc

    def qa_config(self) -> qa_mod.QaConfig:
        return qa_mod.QaConfig(
            low_percentile=int(self.qa.get("low_percentile", 5)),
            high_percentile=int(self.qa.get("high_percentile", 95)),
            per_language=bool(self.qa.get("per_language", True)),
            dedup=bool(self.qa.get("dedup", True)),
        )

    def split_plan(self) -> splits_mod.SplitAssignment:
        ratios = tuple(self.split.get("ratios", (0.8, 0.1, 0.1)))
        keys = tuple(self.split.get("stratify_keys", ("label", "language", "source")))
        return splits_mod.SplitAssignment(ratios=ratios, stratify_keys=keys,
                                          seed=int(self.seed))

    def max_missing(self) -> float:
        return float(self.features.get("max_missing", 0.2))

    def model_kind(self) -> str:
        kind = self.model.get("kind", "gbdt")
        if kind not in ("gbdt", "linear"):
            raise ConfigError(f"unknown model kind {kind!r}")
        return kind

    def model_config(self):
        kind = self.model_kind()
        params = {k: v for k, v in self.model.items() if k != "kind"}
        if kind == "gbdt":
            defaults = dict(trees=2000, learning_rate=0.1, max_depth=6,
                            min_samples_leaf=20, subsample=1.0)
            defaults.update(params)
            return GbdtConfig(
                trees=int(defaults["trees"]),
                learning_rate=float(defaults["learning_rate"]),
                max_depth=int(defaults["max_depth"]),
                min_samples_leaf=int(defaults["min_samples_leaf"]),
                subsample=float(defaults["subsample"]),
                seed=int(self.seed),
            )
        defaults = dict(l2=1e-4, epochs=20, learning_rate=0.01, rff_dims=None)
        defaults.update(params)
        rff = defaults["rff_dims"]
        return LinearConfig(
            l2=float(defaults["l2"]), epochs=int(defaults["epochs"]),
            learning_rate=float(defaults["learning_rate"]),
            rff_dims=None if rff in (None, 0) else int(rff),
            seed=int(self.seed),
        )

    def eval_protocol(self) -> Optional[OodProtocol]:
        protocol = self.eval.get("protocol", "in_domain")
        if protocol == "in_domain":
            return None
        if protocol != "ood":
            raise ConfigError(f"unknown eval protocol {protocol!r}")
        return OodProtocol(
            generators=frozenset(self.eval.get("generators", ())),
            sources=frozenset(self.eval.get("sources", ())),
            languages=frozenset(self.eval.get("languages", ())),
        )

    def zeroshot_params(self) -> dict:
        return {
            "order": int(self.zeroshot.get("order", 4)),
            "add_k": float(self.zeroshot.get("add_k", 0.01)),
            "k": int(self.zeroshot.get("k", 64)),
            "command": self.zeroshot.get("command"),
        }


# ---------------------------------------------------------------------------
# artifacts


class RunPaths:
    def __init__(self, out: str | Path):
        self.root = Path(out)

    def __getattr__(self, name: str) -> Path:
        files = {
            "ingested": "ingested.jsonl",
            "qa_corpus": "qa_corpus.jsonl",
            "qa_report": "qa_report.json",
            "split_corpus": "split_corpus.jsonl",
            "split_report": "split_report.json",
            "features_meta": "features.meta.json",
            "model": "model.json",
            "predictions": "predictions.jsonl",
            "eval_report": "eval_report.json",
            "confusion": "confusion.csv",
            "eval_table": "eval_table.txt",
            "importance": "importance.json",
            "zeroshot_fit": "zeroshot_fit.json",
            "zeroshot_predictions": "zeroshot_predictions.jsonl",
            "zeroshot_report": "zeroshot_report.json",
            "manifest": "run_manifest.json",
        }
        if name in files:
            return self.root / files[name]
        raise AttributeError(name)

    def features_csv(self, split: str) -> Path:
        return self.root / f"features_{split}.csv"


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


# ---------------------------------------------------------------------------
# stages


def stage_ingest(config: RunConfig, paths: RunPaths) -> list[CodeSample]:
    samples = ingest(config.corpus)
    paths.root.mkdir(parents=True, exist_ok=True)
    write_jsonl(samples, paths.ingested)
    return samples


def stage_qa(config: RunConfig, paths: RunPaths,
             samples: list[CodeSample]) -> list[CodeSample]:
    clean, report = qa_mod.run_qa(samples, config.qa_config())
    write_jsonl(clean, paths.qa_corpus)
    payload = json.loads(report.to_json())
    payload["config_digest"] = config.digest()
    _write_json(paths.qa_report, payload)
    return clean


def stage_split(config: RunConfig, paths: RunPaths,
                samples: list[CodeSample]) -> list[CodeSample]:
    if all(s.split for s in samples):
        assigned = samples  # corpus came pre-split
        report = None
    else:
        assigned, report = splits_mod.assign_splits(samples, config.split_plan())
    write_jsonl(assigned, paths.split_corpus)
    payload = {
        "config_digest": config.digest(),
        "counts": {s: sum(1 for x in assigned if x.split == s)
                   for s in ("train", "val", "test")},
        "small_strata_to_train": report.small_strata if report else [],
        "strata": report.strata if report else None,
    }
    _write_json(paths.split_report, payload)
    return assigned


def _extract_one(sample: CodeSample) -> stylometry.FeatureVector:
    return stylometry.extract_features(sample)


def extract_vectors(samples: list[CodeSample], jobs: int = 1):
    if jobs <= 1:
        return [stylometry.extract_features(s) for s in samples]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_extract_one, samples, chunksize=32))


def stage_featurize(config: RunConfig, paths: RunPaths,
                    samples: list[CodeSample]):
    """Vectors for all samples; schema fitted on the train split."""
    task = config.task
    vectors = extract_vectors(samples, config.jobs)
    for vector, sample in zip(vectors, samples):
        vector.label = task_label(sample, task)

    by_split = {"train": [], "val": [], "test": []}
    for vector, sample in zip(vectors, samples):
        by_split[sample.split or "train"].append(vector)
    if not by_split["train"]:
        raise StageError("featurize", "no training rows after split")
    matrix, schema = features_mod.build_matrix(by_split["train"],
                                               config.max_missing())
    matrices = {"train": matrix}
    for split in ("val", "test"):
        if by_split[split]:
            matrices[split] = features_mod.apply_schema(by_split[split], schema)

    for split, m in matrices.items():
        features_mod.write_matrix_csv(m, paths.features_csv(split))
    sidecar = json.loads(schema.to_json())
    sidecar["config_digest"] = config.digest()
    ast_depth = {}
    for split, vecs in by_split.items():
        depths = [v.values["ast_depth"] for v in vecs if "ast_depth" in v.values]
        ast_depth[split] = float(np.mean(depths)) if depths else None
    sidecar["mean_ast_depth_by_split"] = ast_depth
    _write_json(paths.features_meta, sidecar)
    return vectors, matrices, schema


def stage_train(config: RunConfig, paths: RunPaths, matrices, schema) -> TrainedModel:
    kind = config.model_kind()
    cfg = config.model_config()
    trainer = train_gbdt if kind == "gbdt" else train_linear
    model = trainer(matrices["train"], cfg)
    model.metadata["config_digest"] = config.digest()
    model.metadata["task"] = config.task
    model.metadata["feature_schema"] = json.loads(schema.to_json())
    save_model(model, paths.model)
    return model


def write_predictions(path: Path, ids, golds, preds, scores, label_space) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for i, sample_id in enumerate(ids):
            record = {
                "id": sample_id,
                "gold": golds[i],
                "pred": preds[i],
                "scores": {label: float(scores[i][j])
                           for j, label in enumerate(label_space)},
            }
            handle.write(json.dumps(record) + "\n")


def read_predictions(path: str | Path):
    ids, golds, preds, scores = [], [], [], []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            record = json.loads(line)
            ids.append(record["id"])
            golds.append(record["gold"])
            preds.append(record["pred"])
            scores.append(record.get("scores", {}))
    return ids, golds, preds, scores


def stage_evaluate(config: RunConfig, paths: RunPaths, model: TrainedModel,
                   samples: list[CodeSample], matrices) -> EvalReport:
    protocol = config.eval_protocol()
    task = config.task
    if protocol is None:
        test_samples = [s for s in samples if s.split == "test"]
        matrix = matrices.get("test")
        if matrix is None or not test_samples:
            raise StageError("evaluate", "no test rows to evaluate")
        preds, scores = predict(model, matrix)
        golds = matrix.labels
        report = EvalReport.from_results(
            task, preds, golds, model.label_space, samples=test_samples,
            group_keys=("language", "source", "generator"),
            metadata={"protocol": "in_domain"},
        )
        write_predictions(paths.predictions, matrix.ids, golds, preds, scores,
                          model.label_space)
    else:
        report, preds_pack = _evaluate_ood(config, samples, protocol)
        write_predictions(paths.predictions, *preds_pack)
    report.metadata["config_digest"] = config.digest()
    report.metadata["model_kind"] = config.model_kind()
    report.metadata["seed"] = config.seed
    report.write(paths.eval_report)
    report.write_confusion_csv(paths.confusion)
    paths.eval_table.write_text(render_table(report) + "\n", encoding="utf-8")
    return report


def _evaluate_ood(config: RunConfig, samples: list[CodeSample],
                  protocol: OodProtocol):
    """Retrain on the filtered pool, evaluate on the held-out slice."""
    task = config.task
    train, test = ood_split(samples, protocol)
    vectors_train = extract_vectors(train, config.jobs)
    vectors_test = extract_vectors(test, config.jobs)
    for vector, sample in zip(vectors_train, train):
        vector.label = task_label(sample, task)
    for vector, sample in zip(vectors_test, test):
        vector.label = task_label(sample, task)
    matrix, schema = features_mod.build_matrix(vectors_train, config.max_missing())
    trainer = train_gbdt if config.model_kind() == "gbdt" else train_linear
    model = trainer(matrix, config.model_config())
    test_matrix = features_mod.apply_schema(vectors_test, schema)
    preds, scores = predict(model, test_matrix)
    golds = test_matrix.labels
    report = EvalReport.from_results(
        task, preds, golds, model.label_space, samples=test,
        group_keys=("language", "source", "generator"),
        metadata={
            "protocol": {axis: sorted(values)
                         for axis, values in protocol.axes().items() if values},
            "n_train": len(train),
            "n_test": len(test),
        },
    )
    return report, (test_matrix.ids, golds, preds, scores, model.label_space)


def stage_zeroshot(config: RunConfig, paths: RunPaths,
                   samples: list[CodeSample]) -> EvalReport:
    params = config.zeroshot_params()
    train = [s for s in samples if s.split == "train"]
    val = [s for s in samples if s.split == "val"] or train
    test = [s for s in samples if s.split == "test"] or val

    if params["command"]:
        backend = zeroshot.ProcessBackend(params["command"])
    else:
        reference = [s.code for s in train if s.label == "llm"] or \
            [s.code for s in train]
        backend = zeroshot.NgramBackend(params["order"], params["add_k"])
        backend.fit(reference)

    def scores_for(group):
        return [zeroshot.curvature_score(s.code, backend, params["k"], config.seed)
                for s in group]

    val_scores = scores_for(val)
    val_golds = [task_label(s, "binary") for s in val]
    fitted = zeroshot.fit_threshold(val_scores, val_golds)
    _write_json(paths.zeroshot_fit, {
        "config_digest": config.digest(),
        "threshold": fitted.threshold,
        "val_macro_f1": fitted.macro_f1,
        "inverted_polarity": fitted.inverted_polarity,
        "k": params["k"],
        "order": params["order"],
    })

    test_scores = scores_for(test)
    golds = [task_label(s, "binary") for s in test]
    preds = ["llm" if s >= fitted.threshold else "human" for s in test_scores]
    with open(paths.zeroshot_predictions, "w", encoding="utf-8") as handle:
        for sample, score, pred, gold in zip(test, test_scores, preds, golds):
            handle.write(json.dumps({
                "id": sample.id, "gold": gold, "pred": pred,
                "scores": {"curvature": score},
            }) + "\n")
    report = EvalReport.from_results(
        "binary", preds, golds, ["human", "llm"], samples=test,
        group_keys=("language", "source"),
        metadata={"config_digest": config.digest(), "protocol": "zeroshot",
                  "threshold": fitted.threshold},
    )
    report.write(paths.zeroshot_report)
    return report


def stage_explain(config: RunConfig, paths: RunPaths, model: TrainedModel,
                  matrices) -> None:
    if model.kind == "gbdt":
        report = gain_importance(model)
    else:
        matrix = matrices.get("val") or matrices.get("test") or matrices["train"]
        report = permutation_importance(model, matrix, seed=config.seed)
    payload = report.to_dict()
    payload["config_digest"] = config.digest()
    _write_json(paths.importance, payload)


# ---------------------------------------------------------------------------
# full run


def run_pipeline(config: RunConfig, with_zeroshot: bool = False,
                 with_explain: bool = False) -> dict:
    """Execute the staged pipeline; returns a summary dict.

    Raises ConfigError for invalid configuration and StageError for
    failures inside a stage (the stage name travels with the error).
    """
    config.validate()
    paths = RunPaths(config.out)
    paths.root.mkdir(parents=True, exist_ok=True)

    def guarded(stage, fn, *args):
        try:
            return fn(*args)
        except (ConfigError, StageError):
            raise
        except Exception as exc:
            raise StageError(stage, str(exc)) from exc

    samples = guarded("ingest", stage_ingest, config, paths)
    clean = guarded("qa", stage_qa, config, paths, samples)
    assigned = guarded("split", stage_split, config, paths, clean)
    vectors, matrices, schema = guarded("featurize", stage_featurize, config,
                                        paths, assigned)
    model = guarded("train", stage_train, config, paths, matrices, schema)
    report = guarded("evaluate", stage_evaluate, config, paths, model,
                     assigned, matrices)
    if with_zeroshot:
        guarded("zeroshot", stage_zeroshot, config, paths, assigned)
    if with_explain:
        guarded("explain", stage_explain, config, paths, model, matrices)

    manifest = {
        "config": config.to_dict(),
        "config_digest": config.digest(),
        "overall": report.overall,
        "notes": report.notes,
        "mean_ast_depth_by_split": json.loads(
            paths.features_meta.read_text())["mean_ast_depth_by_split"],
        "finished_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    _write_json(paths.manifest, manifest)
    return manifest


# ---------------------------------------------------------------------------
# single prediction


def predict_single(model_path: str | Path, code: str, language: str) -> dict:
    """One JSON-ready prediction for one snippet."""
    if not code.strip():
        raise ValueError("empty input")
    model = load_model(model_path)
    schema_data = model.metadata.get("feature_schema")
    if not schema_data:
        raise ValueError("model file lacks an embedded feature schema")
    schema = features_mod.FeatureSchema.from_json(json.dumps(schema_data))

    sample = CodeSample(id="adhoc", code=code, language=language, label="human")
    stripped = qa_mod.strip_comments(sample)
    vector = stylometry.extract_features(stripped)
    warning = None
    if "ast_depth" not in vector.values:
        warning = "unparsable code: falling back to text-derived features"
    matrix = features_mod.apply_schema([vector], schema)
    labels, scores = predict(model, matrix)
    result = {
        "label": labels[0],
        "scores": {label: float(scores[0][j])
                   for j, label in enumerate(model.label_space)},
        "language": language,
        "model_schema": model.feature_schema_hash[:12],
    }
    if warning:
        result["warning"] = warning
    return result
