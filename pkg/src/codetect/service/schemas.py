"""Request/response models for the HTTP service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class LanguagesResponse(BaseModel):
    languages: list[str]


class LoadModelRequest(BaseModel):
    path: str


class LoadModelResponse(BaseModel):
    model_id: str
    kind: str
    label_space: list[str]
    schema_hash: str


class ModelInfo(BaseModel):
    model_id: str
    kind: str
    label_space: list[str]


class ModelsResponse(BaseModel):
    models: list[ModelInfo]


class SnippetRequest(BaseModel):
    code: str
    language: str


class PredictRequest(BaseModel):
    model_id: Optional[str] = None
    model_path: Optional[str] = None
    samples: list[SnippetRequest]


class Prediction(BaseModel):
    label: str
    scores: dict[str, float]
    warning: Optional[str] = None


class PredictResponse(BaseModel):
    predictions: list[Prediction]


class ZeroshotRequest(BaseModel):
    samples: list[SnippetRequest]
    reference_texts: Optional[list[str]] = None
    reference_path: Optional[str] = None
    order: int = 4
    add_k: float = 0.01
    k: int = Field(default=64, ge=2)
    seed: int = 0
    threshold: Optional[float] = None


class ZeroshotScore(BaseModel):
    score: float
    label: Optional[str] = None


class ZeroshotResponse(BaseModel):
    scores: list[ZeroshotScore]


class QaRequest(BaseModel):
    corpus: str
    out: str
    low_percentile: int = 5
    high_percentile: int = 95
    per_language: bool = True
    dedup: bool = True


class RunRequest(BaseModel):
    config: dict
    with_zeroshot: bool = False
    with_explain: bool = False


class RunResponse(BaseModel):
    config_digest: str
    out: str
    overall: dict
    notes: list[str]
