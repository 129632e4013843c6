"""Python grammar backend on top of the stdlib ``ast`` parser."""

from __future__ import annotations

import ast
import re

from . import Node, ParseFailure

_SNAKE = re.compile(r"(?<=[a-z0-9])(?=[A-Z])")


class _Segments:
    """Source-segment extraction with line offsets computed once.

    ast.get_source_segment re-splits the file per call, which turns
    condition extraction quadratic on large files. Column offsets are
    utf-8 byte offsets, so lines are sliced as bytes.
    """

    def __init__(self, code: str):
        self.lines = [line.encode("utf-8") for line in code.split("\n")]

    def get(self, node: ast.AST) -> str:
        lineno = getattr(node, "lineno", None)
        end_lineno = getattr(node, "end_lineno", None)
        col = getattr(node, "col_offset", None)
        end_col = getattr(node, "end_col_offset", None)
        if None in (lineno, end_lineno, col, end_col):
            return ""
        if lineno > len(self.lines) or end_lineno > len(self.lines):
            return ""
        try:
            if lineno == end_lineno:
                return self.lines[lineno - 1][col:end_col].decode("utf-8")
            parts = [self.lines[lineno - 1][col:]]
            parts.extend(self.lines[lineno:end_lineno - 1])
            parts.append(self.lines[end_lineno - 1][:end_col])
            return b"\n".join(parts).decode("utf-8")
        except (UnicodeDecodeError, IndexError):
            return ""

# expression-context leaves (Load/Store/Del) say nothing about style; every
# Name has exactly one, so they are skipped rather than counted
_SKIPPED = (ast.Load, ast.Store, ast.Del)

_DECISIONS = (ast.If, ast.While, ast.IfExp)
_ASSIGNMENTS = (ast.Assign, ast.AugAssign, ast.AnnAssign, ast.NamedExpr)
_FUNCTIONS = (ast.FunctionDef, ast.AsyncFunctionDef)


def _type_name(node: ast.AST) -> str:
    return _SNAKE.sub("_", type(node).__name__).lower()


class PythonBackend:
    language = "python"

    def parse(self, code: str) -> Node:
        try:
            tree = ast.parse(code)
        except (SyntaxError, ValueError, MemoryError, RecursionError) as exc:
            raise ParseFailure(f"unparsable: {exc}") from exc
        segments = _Segments(code)
        try:
            return self._convert(tree, segments,
                                 parent_span=(1, max(1, code.count("\n") + 1)))
        except RecursionError as exc:
            raise ParseFailure("unparsable: nesting too deep") from exc

    def _convert(self, node: ast.AST, segments: _Segments,
                 parent_span: tuple[int, int]) -> Node:
        start = getattr(node, "lineno", parent_span[0])
        end = getattr(node, "end_lineno", None) or start
        out = Node(_type_name(node), start, end)

        if isinstance(node, _FUNCTIONS):
            out.role = "function"
        elif isinstance(node, _DECISIONS):
            out.role = "decision"
            out.text = segments.get(node.test)
        elif isinstance(node, (ast.For, ast.AsyncFor)):
            out.role = "decision"
            out.text = segments.get(node.iter)
        elif isinstance(node, ast.Match):
            out.role = "decision"
            out.text = segments.get(node.subject)
        elif isinstance(node, _ASSIGNMENTS):
            out.role = "assignment"
        elif isinstance(node, ast.Name) and isinstance(node.ctx, ast.Store):
            out.role = "variable"
            out.text = node.id
        elif isinstance(node, ast.arg):
            out.role = "variable"
            out.text = node.arg

        for child in ast.iter_child_nodes(node):
            if isinstance(child, _SKIPPED):
                continue
            out.children.append(self._convert(child, segments, (start, end)))
        return out
