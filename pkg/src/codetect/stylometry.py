"""AST summaries and the handcrafted stylometric feature set.

Features come in three groups: text-derived (line lengths, whitespace),
tree-derived (depth, functions, decisions, assignments, per-node-type
densities) and token-derived (Halstead counts feeding the maintainability
index). Node-type density features are namespaced by language because the
backends do not share a grammar vocabulary.

Counting conventions the backends rely on:

* the tree root is not included in node counts (one per sample, zero
  information);
* cyclomatic complexity is 1 + decision nodes + case/when/catch-like
  clauses + boolean operators;
* Halstead operators are operator tokens (closing brackets excluded) plus
  keywords; operands are identifiers and literals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import lexer
from .parsing import Node, ParseFailure, get_backend
from .samples import CodeSample

_CLOSERS = frozenset({")", "]", "}"})
_CC_CLAUSES = frozenset(
    {"case_clause", "catch_clause", "except_handler", "when_clause",
     "rescue_clause", "boolean_operator", "bool_op"}
)


@dataclass
class AstSummary:
    node_counts: dict[str, int] = field(default_factory=dict)
    max_depth: int = 0
    function_spans: list[tuple[int, int]] = field(default_factory=list)
    decision_condition_lengths: list[int] = field(default_factory=list)
    assignment_count: int = 0
    identifier_lengths: list[int] = field(default_factory=list)
    lines_of_code: int = 0
    halstead_total_operators: int = 0
    halstead_distinct_operators: int = 0
    halstead_total_operands: int = 0
    halstead_distinct_operands: int = 0
    cyclomatic_complexity: int = 1


def lines_of_code(code: str) -> int:
    return sum(1 for line in code.split("\n") if line.strip())


def parse(code: str, language: str) -> AstSummary:
    """Parse and summarize; raises ParseFailure ("unparsable") on failure."""
    backend = get_backend(language)
    root = backend.parse(code)
    summary = AstSummary(lines_of_code=lines_of_code(code))
    _walk(root, summary)
    _halstead(code, language, summary)
    summary.cyclomatic_complexity = 1 + len(summary.decision_condition_lengths) + sum(
        count for node_type, count in summary.node_counts.items()
        if node_type in _CC_CLAUSES
    )
    return summary


def _walk(root: Node, summary: AstSummary) -> None:
    stack = [(child, 1) for child in root.children]
    deepest = 0
    while stack:
        node, depth = stack.pop()
        deepest = max(deepest, depth)
        summary.node_counts[node.type] = summary.node_counts.get(node.type, 0) + 1
        if node.role == "function":
            summary.function_spans.append((node.start_line, node.end_line))
        elif node.role == "decision":
            summary.decision_condition_lengths.append(len(node.text or ""))
        elif node.role == "assignment":
            summary.assignment_count += 1
        elif node.role == "variable" and node.text:
            summary.identifier_lengths.append(len(node.text))
        for child in node.children:
            stack.append((child, depth + 1))
    summary.max_depth = deepest
    summary.function_spans.sort()


def _halstead(code: str, language: str, summary: AstSummary) -> None:
    keywords = lexer.KEYWORDS.get(language, frozenset())
    operators: dict[str, int] = {}
    operands: dict[str, int] = {}
    for token in lexer.scan(code, language):
        if token.kind == "comment":
            continue
        if token.kind == "op":
            if token.text not in _CLOSERS:
                operators[token.text] = operators.get(token.text, 0) + 1
        elif token.kind == "word":
            if token.text in keywords:
                operators[token.text] = operators.get(token.text, 0) + 1
            else:
                operands[token.text] = operands.get(token.text, 0) + 1
        else:  # number or string literal
            operands[token.text] = operands.get(token.text, 0) + 1
    summary.halstead_total_operators = sum(operators.values())
    summary.halstead_distinct_operators = len(operators)
    summary.halstead_total_operands = sum(operands.values())
    summary.halstead_distinct_operands = len(operands)


def halstead_volume(summary: AstSummary) -> float:
    total = summary.halstead_total_operators + summary.halstead_total_operands
    distinct = summary.halstead_distinct_operators + summary.halstead_distinct_operands
    volume = total * math.log2(distinct) if distinct > 0 else 0.0
    return volume


def maintainability_index(summary: AstSummary) -> float:
    """171-based three-term maintainability index, clamped to [0, 171].

    A vanishing Halstead volume is treated as 1 so the logarithm stays
    defined on degenerate inputs.
    """
    loc = max(summary.lines_of_code, 1)
    volume = halstead_volume(summary)
    if volume <= 0:
        volume = 1.0
    value = (
        171.0
        - 5.2 * math.log(volume)
        - 0.23 * summary.cyclomatic_complexity
        - 16.2 * math.log(loc)
    )
    return min(max(value, 0.0), 171.0)


# ---------------------------------------------------------------------------
# feature extraction


@dataclass
class FeatureVector:
    sample_id: str
    language: str
    label: str
    values: dict[str, float] = field(default_factory=dict)


def text_features(code: str) -> dict[str, float]:
    values: dict[str, float] = {}
    nonblank = [line for line in code.split("\n") if line.strip()]
    if nonblank:
        values["avg_line_length"] = sum(len(line) for line in nonblank) / len(nonblank)
    if code:
        whitespace = sum(1 for c in code if c.isspace())
        values["whitespace_ratio"] = whitespace / len(code)
    return values


def extract_features(sample: CodeSample) -> FeatureVector:
    """Full stylometric vector; falls back to text-only features when the
    grammar backend rejects the code."""
    vector = FeatureVector(sample.id, sample.language, sample.label,
                           text_features(sample.code))
    try:
        summary = parse(sample.code, sample.language)
    except ParseFailure:
        return vector
    values = vector.values
    loc = max(summary.lines_of_code, 1)
    if summary.decision_condition_lengths:
        values["max_decision_length"] = float(max(summary.decision_condition_lengths))
    values["function_density"] = len(summary.function_spans) / loc
    if summary.function_spans:
        span_lines = [end - start + 1 for start, end in summary.function_spans]
        values["avg_function_length"] = sum(span_lines) / len(span_lines)
    if summary.identifier_lengths:
        values["avg_var_name_length"] = (
            sum(summary.identifier_lengths) / len(summary.identifier_lengths)
        )
    values["maintainability_index"] = maintainability_index(summary)
    values["ast_depth"] = float(summary.max_depth)
    values["assignment_count"] = float(summary.assignment_count)
    for node_type, count in summary.node_counts.items():
        values[f"node_density/{sample.language}/{node_type}"] = count / loc
    return vector


def density_language(feature_name: str) -> str | None:
    """Language namespace of a node-density feature, None for the rest."""
    if feature_name.startswith("node_density/"):
        return feature_name.split("/", 2)[1]
    return None
