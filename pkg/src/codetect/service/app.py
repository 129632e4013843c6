"""HTTP service exposing the toolkit for long-running, multi-client use.

Thin wrappers over the core package: model registry plus prediction,
zero-shot scoring, QA and full pipeline runs. The CLI shares the same core
functions; anything the service can do, a batch run can reproduce.
"""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException

from .. import __version__
from .. import pipeline as pl
from .. import qa as qa_mod
from .. import zeroshot
from ..features import FeatureSchema, apply_schema
from ..lexer import SUPPORTED_LANGUAGES, is_supported
from ..models import (
    ModelFormatError,
    SchemaMismatchError,
    load_model,
    predict as predict_rows,
)
from ..samples import CodeSample, ingest
from ..stylometry import extract_features
from . import schemas

app = FastAPI(
    title="codetect",
    description="Stylometric detection and attribution of machine-generated "
                "program code.",
    version=__version__,
)

_registry: dict[str, object] = {}
_registry_lock = threading.Lock()


@app.get("/health", response_model=schemas.HealthResponse)
def health():
    return schemas.HealthResponse(status="ok", version=__version__)


@app.get("/languages", response_model=schemas.LanguagesResponse)
def languages():
    return schemas.LanguagesResponse(languages=list(SUPPORTED_LANGUAGES))


@app.post("/models/load", response_model=schemas.LoadModelResponse)
def models_load(request: schemas.LoadModelRequest):
    try:
        model = load_model(request.path)
    except ModelFormatError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    except OSError as exc:
        raise HTTPException(status_code=404, detail=str(exc))
    model_id = uuid.uuid4().hex[:12]
    with _registry_lock:
        _registry[model_id] = model
    return schemas.LoadModelResponse(
        model_id=model_id,
        kind=model.kind,
        label_space=model.label_space,
        schema_hash=model.feature_schema_hash,
    )


@app.get("/models", response_model=schemas.ModelsResponse)
def models_list():
    with _registry_lock:
        items = [
            schemas.ModelInfo(model_id=mid, kind=m.kind, label_space=m.label_space)
            for mid, m in sorted(_registry.items())
        ]
    return schemas.ModelsResponse(models=items)


def _resolve_model(request: schemas.PredictRequest):
    if request.model_id:
        with _registry_lock:
            model = _registry.get(request.model_id)
        if model is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown model_id {request.model_id}")
        return model
    if request.model_path:
        try:
            return load_model(request.model_path)
        except (ModelFormatError, OSError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
    raise HTTPException(status_code=422, detail="model_id or model_path required")


@app.post("/predict", response_model=schemas.PredictResponse)
def predict(request: schemas.PredictRequest):
    model = _resolve_model(request)
    schema_data = model.metadata.get("feature_schema")
    if not schema_data:
        raise HTTPException(status_code=400,
                            detail="model file lacks an embedded feature schema")
    schema = FeatureSchema.from_json(json.dumps(schema_data))
    predictions = []
    for snippet in request.samples:
        if not snippet.code.strip():
            raise HTTPException(status_code=422, detail="empty code snippet")
        if not is_supported(snippet.language):
            raise HTTPException(
                status_code=422,
                detail=f"unsupported language {snippet.language!r}; supported: "
                       f"{', '.join(SUPPORTED_LANGUAGES)}",
            )
        sample = CodeSample(id="adhoc", code=snippet.code,
                            language=snippet.language, label="human")
        vector = extract_features(qa_mod.strip_comments(sample))
        warning = None
        if "ast_depth" not in vector.values:
            warning = "unparsable code: falling back to text-derived features"
        matrix = apply_schema([vector], schema)
        try:
            labels, scores = predict_rows(model, matrix)
        except SchemaMismatchError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        predictions.append(schemas.Prediction(
            label=labels[0],
            scores={label: float(scores[0][j])
                    for j, label in enumerate(model.label_space)},
            warning=warning,
        ))
    return schemas.PredictResponse(predictions=predictions)


@app.post("/zeroshot/score", response_model=schemas.ZeroshotResponse)
def zeroshot_score(request: schemas.ZeroshotRequest):
    reference = list(request.reference_texts or [])
    if request.reference_path:
        try:
            reference.extend(s.code for s in ingest(request.reference_path))
        except OSError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
    if not reference:
        raise HTTPException(status_code=422,
                            detail="reference_texts or reference_path required")
    backend = zeroshot.NgramBackend(request.order, request.add_k).fit(reference)
    scores = []
    for snippet in request.samples:
        if not snippet.code:
            raise HTTPException(status_code=422, detail="empty code snippet")
        value = zeroshot.curvature_score(snippet.code, backend,
                                         k=request.k, seed=request.seed)
        label = None
        if request.threshold is not None:
            label = "llm" if value >= request.threshold else "human"
        scores.append(schemas.ZeroshotScore(score=value, label=label))
    return schemas.ZeroshotResponse(scores=scores)


@app.post("/qa")
def qa_run(request: schemas.QaRequest):
    config = pl.RunConfig(corpus=request.corpus, out=request.out, qa={
        "low_percentile": request.low_percentile,
        "high_percentile": request.high_percentile,
        "per_language": request.per_language,
        "dedup": request.dedup,
    })
    try:
        config.validate()
        paths = pl.RunPaths(config.out)
        paths.root.mkdir(parents=True, exist_ok=True)
        samples = pl.stage_ingest(config, paths)
        pl.stage_qa(config, paths, samples)
    except pl.ConfigError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    except (ValueError, pl.StageError) as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return json.loads(paths.qa_report.read_text())


@app.post("/runs", response_model=schemas.RunResponse)
def runs(request: schemas.RunRequest):
    try:
        config = pl.RunConfig.from_dict(request.config)
        manifest = pl.run_pipeline(config, with_zeroshot=request.with_zeroshot,
                                   with_explain=request.with_explain)
    except pl.ConfigError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    except pl.StageError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return schemas.RunResponse(
        config_digest=manifest["config_digest"],
        out=str(Path(config.out)),
        overall=manifest["overall"],
        notes=manifest["notes"],
    )
