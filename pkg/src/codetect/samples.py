"""Labeled code samples and the JSONL exchange format.

A corpus is a sequence of :class:`CodeSample` records. On disk it is JSONL,
one record per line, UTF-8, with the lowercase field names used here. Enum
fields keep their raw string value; anything outside the known vocabulary is
treated as an ``other`` tag but preserved verbatim so that grouping and
stratification still tell unknown values apart.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional

KNOWN_LANGUAGES = frozenset(
    {"python", "java", "cpp", "csharp", "go", "javascript", "php", "ruby"}
)
KNOWN_SOURCES = frozenset({"leetcode", "codeforces", "github", "mbpp", "thevault"})
KNOWN_GENERATORS = frozenset({"gpt4o", "codellama", "llama31", "codeqwen15", "nxcode"})
LABELS = ("human", "llm", "hybrid")
SPLITS = ("train", "val", "test")


class IngestError(ValueError):
    """Raised for malformed corpus files; carries the offending line number."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass
class CodeSample:
    id: str
    code: str
    language: str
    source: str = "other"
    label: str = "human"
    generator: Optional[str] = None
    split: Optional[str] = None
    # fraction of preserved human-written lines, only meaningful for hybrids
    human_fraction: Optional[float] = None

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown label {self.label!r}")
        if self.label == "human" and self.generator is not None:
            raise ValueError("generator must be absent for human samples")
        if self.label in ("llm", "hybrid") and not self.generator:
            raise ValueError(f"generator required for {self.label}")
        if self.split is not None and self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}")

    def with_code(self, code: str) -> "CodeSample":
        clone = CodeSample(**asdict(self))
        clone.code = code
        return clone

    def to_record(self) -> dict:
        record = {
            "id": self.id,
            "code": self.code,
            "language": self.language,
            "source": self.source,
            "label": self.label,
        }
        if self.generator is not None:
            record["generator"] = self.generator
        if self.split is not None:
            record["split"] = self.split
        if self.human_fraction is not None:
            record["human_fraction"] = self.human_fraction
        return record


def content_id(code: str) -> str:
    """Deterministic sample id from the code body alone."""
    return hashlib.sha256(code.encode("utf-8")).hexdigest()[:16]


def canonical_language(language: str) -> str:
    return language if language in KNOWN_LANGUAGES else "other"


def canonical_source(source: str) -> str:
    return source if source in KNOWN_SOURCES else "other"


_MANDATORY = ("code", "language", "label")


def sample_from_record(record: dict, line: Optional[int] = None) -> CodeSample:
    for name in _MANDATORY:
        if name not in record or record[name] in (None, ""):
            raise IngestError(f"missing mandatory field {name!r}", line)
    label = record["label"]
    if label not in LABELS:
        raise IngestError(f"unknown label {label!r}", line)
    generator = record.get("generator") or None
    if label in ("llm", "hybrid") and generator is None:
        raise IngestError(f"generator required for {label}", line)
    if label == "human" and generator is not None:
        raise IngestError("generator must be absent for human samples", line)
    split = record.get("split") or None
    if split is not None and split not in SPLITS:
        raise IngestError(f"unknown split {split!r}", line)
    fraction = record.get("human_fraction")
    return CodeSample(
        id=str(record.get("id") or content_id(record["code"])),
        code=record["code"],
        language=str(record["language"]),
        source=str(record.get("source") or "other"),
        label=label,
        generator=generator,
        split=split,
        human_fraction=None if fraction is None else float(fraction),
    )


def ingest(path: str | Path, format: str = "jsonl") -> list[CodeSample]:
    """Read a corpus file, one JSON record per line, in file order.

    Ids absent from the input are generated from a content hash. Malformed
    lines raise :class:`IngestError` naming the line number.
    """
    if format != "jsonl":
        raise ValueError(f"unsupported corpus format {format!r}")
    samples = []
    with open(path, "r", encoding="utf-8") as handle:
        for number, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise IngestError(f"malformed JSON ({exc.msg})", number) from exc
            if not isinstance(record, dict):
                raise IngestError("record is not a JSON object", number)
            samples.append(sample_from_record(record, number))
    return samples


def write_jsonl(samples: Iterable[CodeSample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for sample in samples:
            handle.write(json.dumps(sample.to_record(), ensure_ascii=False) + "\n")


def iter_split(samples: Iterable[CodeSample], split: str) -> Iterator[CodeSample]:
    return (s for s in samples if s.split == split)
