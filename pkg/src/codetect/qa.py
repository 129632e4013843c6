"""Corpus quality assurance: comment removal, length filtering, dedup.

The cleaning order is fixed: comments and docstrings are stripped first,
token counts are taken on the stripped code, then the per-language
percentile filter and deduplication run. Samples that come out empty are
dropped and counted in the run report.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from . import lexer
from .samples import CodeSample


class QaError(ValueError):
    pass


@dataclass
class QaConfig:
    low_percentile: int = 5
    high_percentile: int = 95
    per_language: bool = True
    dedup: bool = True

    def __post_init__(self):
        if not (0 <= self.low_percentile <= 50):
            raise ValueError("low_percentile must be in [0, 50]")
        if not (50 < self.high_percentile <= 100):
            raise ValueError("high_percentile must be in (50, 100]")
        if self.low_percentile >= self.high_percentile:
            raise ValueError("low_percentile must be below high_percentile")


@dataclass
class QaReport:
    """Counts and cut values from one QA run, serializable to JSON."""

    ingested: int = 0
    comment_stripped: int = 0
    length_filtered: int = 0
    deduplicated: int = 0
    dropped_unparsable: int = 0
    percentile_cuts: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "counts": {
                    "ingested": self.ingested,
                    "comment_stripped": self.comment_stripped,
                    "length_filtered": self.length_filtered,
                    "deduplicated": self.deduplicated,
                    "dropped_unparsable": self.dropped_unparsable,
                },
                "percentile_cuts": self.percentile_cuts,
            },
            indent=2,
            sort_keys=True,
        )

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# comment stripping


_MARKER = "\x00"
_MARKER_RUN = re.compile("(?:[ \t]*\x00)+[ \t]*")


def strip_comments_text(code: str, language: str) -> str:
    """Remove comments (and, for python, docstrings) from source text.

    String literals other than docstrings are preserved verbatim. Whitespace
    left behind by a removed span collapses to a single interior space; lines
    that become empty are deleted. Idempotent for every supported language.
    """
    tokens = lexer.scan(code, language)
    spans = [(t.start, t.end) for t in tokens if t.kind == "comment"]
    if language == "python":
        spans.extend(_docstring_spans(code, tokens))
    if not spans:
        return code
    spans.sort()

    pieces = []
    cursor = 0
    for start, end in spans:
        pieces.append(code[cursor:start])
        pieces.append(_MARKER)
        cursor = end
    pieces.append(code[cursor:])
    marked = "".join(pieces)

    out_lines = []
    for line in marked.split("\n"):
        if _MARKER not in line:
            out_lines.append(line)
            continue
        leading = line.lstrip(" \t").startswith(_MARKER)
        line = _MARKER_RUN.sub(" ", line)
        if leading:
            line = line.lstrip(" \t")
        line = line.rstrip()
        if line:
            out_lines.append(line)
    return "\n".join(out_lines)


def _erase_spans(code: str, lo: int, hi: int, spans: Sequence[tuple[int, int]]) -> str:
    chars = list(code[lo:hi])
    for start, end in spans:
        for pos in range(max(start, lo), min(end, hi)):
            if chars[pos - lo] != "\n":
                chars[pos - lo] = " "
    return "".join(chars)


def _docstring_spans(code: str, tokens: Sequence[lexer.Token]) -> list[tuple[int, int]]:
    """Spans of bare string-literal statements (module/class/function docs).

    A string token counts as a docstring when it sits at bracket depth 0,
    opens a physical line that is not a backslash continuation, and nothing
    but whitespace or a comment follows it on the line where it closes.
    """
    spans = []
    comment_spans = [(t.start, t.end) for t in tokens if t.kind == "comment"]
    prev_end = None
    for tok in tokens:
        if tok.kind == "comment":
            continue
        if tok.kind == "string" and tok.depth == 0 and tok.line_first:
            continued = False
            if prev_end is not None:
                gap = _erase_spans(code, prev_end, tok.start, comment_spans)
                continued = re.search(r"\\[ \t]*\n", gap) is not None
            nl = code.find("\n", tok.end)
            line_end = len(code) if nl == -1 else nl
            trailer = _erase_spans(code, tok.end, line_end, comment_spans)
            if not continued and not trailer.strip():
                spans.append((tok.start, tok.end))
        prev_end = tok.end
    return spans


def strip_comments(sample: CodeSample) -> CodeSample:
    """QA step: comment-free copy of one sample."""
    if not lexer.is_supported(sample.language):
        raise QaError(f"no comment grammar for language {sample.language!r}")
    return sample.with_code(strip_comments_text(sample.code, sample.language))


# ---------------------------------------------------------------------------
# token counting and length filter


def count_tokens(code: str, language: str = "") -> int:
    """Language-agnostic token count used by the length filter.

    Whitespace-separated chunks are split further: a run of word characters
    is one token, every other character is a token of its own.
    """
    count = 0
    for chunk in code.split():
        in_word = False
        for char in chunk:
            if char.isalnum() or char == "_":
                if not in_word:
                    count += 1
                    in_word = True
            else:
                count += 1
                in_word = False
    return count


def nearest_rank(values: Sequence[int], percentile: float) -> int:
    """The ceil(p/100 * N)-th order statistic of ``values``."""
    if not values:
        raise ValueError("empty value set")
    ordered = sorted(values)
    if percentile <= 0:
        return ordered[0]
    rank = -(-percentile * len(ordered) // 100)  # ceil without floats
    rank = int(min(max(rank, 1), len(ordered)))
    return ordered[rank - 1]


def filter_by_length(
    samples: Sequence[CodeSample],
    cfg: QaConfig | None = None,
    report: QaReport | None = None,
) -> list[CodeSample]:
    """Drop samples outside the per-language token-count percentile band.

    Bounds are inclusive: only counts strictly below the low cut or strictly
    above the high cut are removed. Relative order is preserved.
    """
    cfg = cfg or QaConfig()
    if not samples:
        raise QaError("empty corpus")
    counts = [count_tokens(s.code, s.language) for s in samples]
    groups: dict[str, list[int]] = {}
    for sample, count in zip(samples, counts):
        key = sample.language if cfg.per_language else "*"
        groups.setdefault(key, []).append(count)
    cuts = {
        key: (
            nearest_rank(values, cfg.low_percentile),
            nearest_rank(values, cfg.high_percentile),
        )
        for key, values in groups.items()
    }
    if report is not None:
        report.percentile_cuts = {
            key: {"low": low, "high": high} for key, (low, high) in sorted(cuts.items())
        }
    kept = []
    for sample, count in zip(samples, counts):
        low, high = cuts[sample.language if cfg.per_language else "*"]
        if low <= count <= high:
            kept.append(sample)
    return kept


# ---------------------------------------------------------------------------
# deduplication


def normalized_code(code: str, language: str) -> str:
    """Dedup key: comment-stripped code with insignificant whitespace folded.

    Trailing whitespace goes per line, leading/trailing blank lines go
    entirely, and interior blank-line runs collapse to a single blank line.
    """
    if lexer.is_supported(language):
        code = strip_comments_text(code, language)
    lines = [line.rstrip() for line in code.split("\n")]
    while lines and not lines[0]:
        lines.pop(0)
    while lines and not lines[-1]:
        lines.pop()
    folded = []
    for line in lines:
        if not line and folded and not folded[-1]:
            continue
        folded.append(line)
    return "\n".join(folded)


def deduplicate(samples: Iterable[CodeSample]) -> list[CodeSample]:
    """Keep the first sample of every normalized-form equivalence class."""
    seen: set[str] = set()
    kept = []
    for sample in samples:
        key = normalized_code(sample.code, sample.language)
        if key in seen:
            continue
        seen.add(key)
        kept.append(sample)
    return kept


# ---------------------------------------------------------------------------
# pipeline


def run_qa(
    samples: Sequence[CodeSample], cfg: QaConfig | None = None
) -> tuple[list[CodeSample], QaReport]:
    """Full QA pass: strip, drop empties, length-filter, deduplicate."""
    cfg = cfg or QaConfig()
    report = QaReport(ingested=len(samples))

    stripped = []
    for sample in samples:
        if not lexer.is_supported(sample.language):
            report.dropped_unparsable += 1
            continue
        clean = strip_comments(sample)
        if not clean.code.strip():
            report.dropped_unparsable += 1
            continue
        stripped.append(clean)
    report.comment_stripped = len(stripped)
    if not stripped:
        raise QaError("empty corpus")

    filtered = filter_by_length(stripped, cfg, report)
    report.length_filtered = len(filtered)

    if cfg.dedup:
        unique = deduplicate(filtered)
    else:
        unique = list(filtered)
    report.deduplicated = len(unique)
    return unique, report
