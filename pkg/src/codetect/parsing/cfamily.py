"""Structural parser for brace-delimited languages.

Covers java, cpp, csharp, go, javascript and php with one token-driven
recursive parser plus per-language tweaks (go's paren-free conditions and
composite literals, C preprocessor lines, arrow functions, php variables).
The output is not a full grammar tree: statements, blocks, control
constructs, calls and literals are recovered; operator precedence is not.
That level of structure is what the stylometric features consume.
"""

from __future__ import annotations

from .. import lexer
from . import Node, ParseFailure

CFAMILY_LANGUAGES = ("java", "cpp", "csharp", "go", "javascript", "php")

_ASSIGN_OPS = frozenset(
    {"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=",
     ">>>=", "**=", "//=", ":=", "||=", "&&="}
)
_BOOL_OPS = frozenset({"&&", "||"})
_BOOL_WORDS = {"php": frozenset({"and", "or", "xor"})}

_CLASS_KEYWORDS = {
    "class": "class_declaration",
    "struct": "struct_declaration",
    "interface": "interface_declaration",
    "enum": "enum_declaration",
    "namespace": "namespace_declaration",
    "trait": "trait_declaration",
    "union": "union_declaration",
}

_STATEMENT_KEYWORDS = {
    "return": "return_statement",
    "break": "break_statement",
    "continue": "continue_statement",
    "throw": "throw_statement",
    "goto": "goto_statement",
    "import": "import_declaration",
    "package": "package_declaration",
    "using": "using_directive",
    "echo": "echo_statement",
    "require": "import_declaration",
    "include": "import_declaration",
    "require_once": "import_declaration",
    "include_once": "import_declaration",
}

_CONDITIONAL = {
    "if": "if_statement",
    "while": "while_statement",
    "for": "for_statement",
    "foreach": "foreach_statement",
    "switch": "switch_statement",
    "elseif": "if_statement",  # php
}

_FUNCTION_KEYWORDS = {
    "go": frozenset({"func"}),
    "javascript": frozenset({"function"}),
    "php": frozenset({"function", "fn"}),
}


class CFamilyBackend:
    def __init__(self, language: str):
        if language not in CFAMILY_LANGUAGES:
            raise ParseFailure(f"not a supported brace language: {language!r}")
        self.language = language

    def parse(self, code: str) -> Node:
        try:
            tokens = [t for t in lexer.scan(code, self.language) if t.kind != "comment"]
        except lexer.LexError as exc:
            raise ParseFailure(str(exc)) from exc
        root = Node("program", 1, max(1, code.count("\n") + 1))
        state = _ParseState(code, tokens, self.language)
        try:
            state.parse_statements(0, len(tokens), root)
        except RecursionError as exc:
            raise ParseFailure("unparsable: nesting too deep") from exc
        return root


class _ParseState:
    def __init__(self, code: str, tokens: list, language: str):
        self.code = code
        self.tokens = tokens
        self.lang = language
        self.keywords = lexer.KEYWORDS[language]
        self.match = self._match_brackets(tokens)
        self.variable_marks: set[int] = set()

    @staticmethod
    def _match_brackets(tokens) -> dict[int, int]:
        stacks: dict[str, list[int]] = {"(": [], "[": [], "{": []}
        pairs = {")": "(", "]": "[", "}": "{"}
        match: dict[int, int] = {}
        for i, t in enumerate(tokens):
            if t.kind != "op":
                continue
            if t.text in stacks:
                stacks[t.text].append(i)
            elif t.text in pairs:
                opened = stacks[pairs[t.text]]
                if opened:
                    j = opened.pop()
                    match[j] = i
                    match[i] = j
        return match

    def _text(self, lo_tok: int, hi_tok: int) -> str:
        """Source text spanning tokens [lo, hi), stripped."""
        if lo_tok >= hi_tok or lo_tok >= len(self.tokens):
            return ""
        return self.code[self.tokens[lo_tok].start:self.tokens[hi_tok - 1].end].strip()

    def _line(self, idx: int) -> int:
        if 0 <= idx < len(self.tokens):
            return self.tokens[idx].line
        return self.tokens[-1].line if self.tokens else 1

    # ------------------------------------------------------------------
    # statement level

    def parse_statements(self, lo: int, hi: int, parent: Node) -> None:
        i = lo
        while i < hi:
            i = self._dispatch(i, hi, parent)

    def _dispatch(self, i: int, hi: int, parent: Node) -> int:
        t = self.tokens[i]
        if t.kind == "op":
            if t.text == ";" or t.text == "}":
                return i + 1
            if t.text == "{":
                close = min(self.match.get(i, hi - 1), hi - 1)
                block = parent.add(Node("block", t.line, self._line(close)))
                self.parse_statements(i + 1, max(i + 1, close), block)
                return close + 1
            if t.text == "#" and t.line_first and self.lang in ("cpp", "csharp"):
                return self._preprocessor(i, hi, parent)
            return self._simple(i, hi, parent)
        if t.kind == "word":
            word = t.text
            if word in _CONDITIONAL and word in self.keywords:
                return self._conditional(i, hi, parent)
            if word == "else":
                return self._else(i, hi, parent)
            if word == "do" and word in self.keywords:
                return self._do(i, hi, parent)
            if word in ("case", "default") and word in self.keywords and \
                    self._colon_terminated(i, hi):
                return self._case(i, hi, parent)
            if word == "try":
                return self._clause(i, hi, parent, "try_statement")
            if word == "catch":
                return self._catch(i, hi, parent)
            if word == "finally":
                return self._clause(i, hi, parent, "finally_clause")
            if word == "select" and self.lang == "go":
                return self._clause(i, hi, parent, "select_statement")
            if word in _FUNCTION_KEYWORDS.get(self.lang, frozenset()):
                return self._keyword_function(i, hi, parent)
        return self._simple(i, hi, parent)

    def _preprocessor(self, i: int, hi: int, parent: Node) -> int:
        line = self.tokens[i].line
        j = i
        while j < hi and self.tokens[j].line == line:
            j += 1
        parent.add(Node("preprocessor_directive", line, line))
        return j

    _ASI_KEYWORDS = frozenset({"return", "break", "continue", "fallthrough"})

    def _asi_terminates(self, token) -> bool:
        """Go automatic semicolon insertion: does a newline after this token
        end the statement?"""
        if token.kind in ("number", "string"):
            return True
        if token.kind == "word":
            return token.text not in self.keywords or \
                token.text in self._ASI_KEYWORDS
        return token.kind == "op" and token.text in (")", "]", "}", "++", "--")

    def _scan_statement(self, i: int, hi: int) -> tuple[int, str]:
        """End of the statement starting at i: (boundary index, boundary kind).

        Kinds: "semi" (';' at depth 0), "brace" ('{' at depth 0), "closer"
        (enclosing '}' or stray closer), "asi" (go newline termination),
        "eof".
        """
        asi = self.lang == "go"
        depth = 0
        j = i
        while j < hi:
            t = self.tokens[j]
            if asi and depth == 0 and j > i and \
                    t.line > self.tokens[j - 1].line and \
                    self._asi_terminates(self.tokens[j - 1]):
                return j, "asi"
            if t.kind == "op":
                if t.text in ("(", "["):
                    depth += 1
                elif t.text in (")", "]"):
                    if depth == 0:
                        return j, "closer"
                    depth -= 1
                elif t.text == ";" and depth == 0:
                    return j, "semi"
                elif t.text == "{":
                    if depth == 0:
                        return j, "brace"
                    j = min(self.match.get(j, hi), hi)
                elif t.text == "}" and depth == 0:
                    return j, "closer"
            j += 1
        return hi, "eof"

    def _colon_terminated(self, i: int, hi: int) -> bool:
        depth = 0
        for j in range(i + 1, hi):
            t = self.tokens[j]
            if t.kind != "op":
                continue
            if t.text in ("(", "["):
                depth += 1
            elif t.text in (")", "]"):
                depth -= 1
            elif t.text == ":" and depth == 0:
                return True
            elif t.text in ("{", "}", ";") and depth == 0:
                return False
        return False

    # ------------------------------------------------------------------
    # control constructs

    def _condition_parens(self, i: int, hi: int) -> tuple[int, int] | None:
        """The '(' group of a control header, allowing a couple of
        intervening words (``if constexpr``, ``await foreach``)."""
        j = i + 1
        hops = 0
        while j < hi and hops < 3:
            t = self.tokens[j]
            if t.kind == "op" and t.text == "(":
                close = self.match.get(j)
                if close is None or close >= hi:
                    return None
                return j, close
            if t.kind != "word":
                return None
            j += 1
            hops += 1
        return None

    def _body(self, i: int, hi: int, node: Node) -> int:
        """Parse a control body: a block or exactly one statement."""
        if i >= hi:
            return hi
        t = self.tokens[i]
        if t.kind == "op" and t.text == "{":
            return self._finish_block(i, hi, node)
        out = self._dispatch(i, hi, node)
        node.end_line = max([node.end_line] + [c.end_line for c in node.children])
        return out

    def _finish_block(self, brace_idx: int, hi: int, node: Node) -> int:
        close = min(self.match.get(brace_idx, hi - 1), hi - 1)
        block = node.add(Node("block", self.tokens[brace_idx].line, self._line(close)))
        self.parse_statements(brace_idx + 1, max(brace_idx + 1, close), block)
        node.end_line = max(node.end_line, block.end_line)
        return close + 1

    def _conditional(self, i: int, hi: int, parent: Node) -> int:
        kw = self.tokens[i].text
        node = Node(_CONDITIONAL[kw], self.tokens[i].line, self.tokens[i].line,
                    role="decision", text="")
        parent.add(node)
        if self.lang == "go":
            end, kind = self._scan_statement(i + 1, hi)
            node.text = self._text(i + 1, end)
            self._mark_targets(i + 1, end)
            self._walk_expression(i + 1, end, node)
            if kind == "brace":
                return self._finish_block(end, hi, node)
            node.end_line = self._line(min(end - 1, hi - 1))
            return min(end + 1 if kind == "semi" else end, hi)
        parens = self._condition_parens(i, hi)
        if parens is None:
            return i + 1  # malformed header; keep the node, move on
        open_idx, close_idx = parens
        node.text = self._text(open_idx + 1, close_idx)
        self._mark_targets(open_idx + 1, close_idx)
        self._walk_expression(open_idx + 1, close_idx, node)
        node.end_line = self._line(close_idx)
        return self._body(close_idx + 1, hi, node)

    def _else(self, i: int, hi: int, parent: Node) -> int:
        node = parent.add(Node("else_clause", self.tokens[i].line, self.tokens[i].line))
        j = i + 1
        if j < hi and self.tokens[j].kind == "word" and self.tokens[j].text == "if":
            out = self._conditional(j, hi, node)
            node.end_line = max([node.end_line] + [c.end_line for c in node.children])
            return out
        return self._body(j, hi, node)

    def _do(self, i: int, hi: int, parent: Node) -> int:
        node = parent.add(
            Node("do_statement", self.tokens[i].line, self.tokens[i].line,
                 role="decision", text="")
        )
        j = self._body(i + 1, hi, node)
        if j < hi and self.tokens[j].kind == "word" and self.tokens[j].text == "while":
            parens = self._condition_parens(j, hi)
            if parens is not None:
                open_idx, close_idx = parens
                node.text = self._text(open_idx + 1, close_idx)
                self._walk_expression(open_idx + 1, close_idx, node)
                node.end_line = max(node.end_line, self._line(close_idx))
                j = close_idx + 1
                if j < hi and self.tokens[j].kind == "op" and self.tokens[j].text == ";":
                    j += 1
        return j

    def _case(self, i: int, hi: int, parent: Node) -> int:
        node_type = "case_clause" if self.tokens[i].text == "case" else "default_clause"
        node = parent.add(Node(node_type, self.tokens[i].line, self.tokens[i].line))
        depth = 0
        j = i + 1
        while j < hi:
            t = self.tokens[j]
            if t.kind == "op":
                if t.text in ("(", "["):
                    depth += 1
                elif t.text in (")", "]"):
                    depth -= 1
                elif t.text == ":" and depth == 0:
                    break
            j += 1
        self._walk_expression(i + 1, j, node)
        node.end_line = self._line(min(j, hi - 1))
        return min(j + 1, hi)

    def _clause(self, i: int, hi: int, parent: Node, node_type: str) -> int:
        node = parent.add(Node(node_type, self.tokens[i].line, self.tokens[i].line))
        parens = self._condition_parens(i, hi)
        j = i + 1
        if parens is not None:
            open_idx, close_idx = parens
            self._walk_expression(open_idx + 1, close_idx, node)
            j = close_idx + 1
        return self._body(j, hi, node)

    def _catch(self, i: int, hi: int, parent: Node) -> int:
        node = parent.add(Node("catch_clause", self.tokens[i].line, self.tokens[i].line))
        parens = self._condition_parens(i, hi)
        j = i + 1
        if parens is not None:
            open_idx, close_idx = parens
            self._mark_parameters(open_idx, close_idx)
            self._walk_expression(open_idx + 1, close_idx, node)
            j = close_idx + 1
        return self._body(j, hi, node)

    def _keyword_function(self, i: int, hi: int, parent: Node) -> int:
        node = Node("function_definition", self.tokens[i].line, self.tokens[i].line,
                    role="function")
        parent.add(node)
        end, kind = self._scan_statement(i + 1, hi)
        self._mark_header_parameters(i + 1, end)
        self._walk_expression(i + 1, end, node)
        if kind == "brace":
            return self._finish_block(end, hi, node)
        node.end_line = self._line(min(end - 1, hi - 1))
        return min(end + 1 if kind == "semi" else end, hi)

    # ------------------------------------------------------------------
    # plain statements

    def _simple(self, i: int, hi: int, parent: Node) -> int:
        end, kind = self._scan_statement(i, hi)
        if end == i:
            return end + 1 if kind != "eof" else hi

        first = self.tokens[i]
        if kind == "brace":
            return self._simple_with_brace(i, end, hi, parent)

        node_type = "expression_statement"
        if first.kind == "word" and first.text in _STATEMENT_KEYWORDS and \
                first.text in self.keywords:
            node_type = _STATEMENT_KEYWORDS[first.text]
        node = parent.add(Node(node_type, first.line, self._line(min(end - 1, hi - 1))))
        self._mark_targets(i, end)
        self._mark_declaration(i, end, kind)
        self._walk_expression(i, end, node)
        return end + 1 if kind == "semi" else end

    def _simple_with_brace(self, i: int, brace_idx: int, hi: int, parent: Node) -> int:
        first = self.tokens[i]
        header_words = [t.text for t in self.tokens[i:brace_idx] if t.kind == "word"]

        class_kw = next((w for w in header_words
                         if w in _CLASS_KEYWORDS and w in self.keywords), None)
        if class_kw is not None:
            node = parent.add(Node(_CLASS_KEYWORDS[class_kw], first.line, first.line))
            self._walk_expression(i, brace_idx, node)
            return self._finish_block(brace_idx, hi, node)

        if self.lang == "go":
            if "func" in header_words:
                node = parent.add(Node("function_definition", first.line, first.line,
                                       role="function"))
                self._mark_targets(i, brace_idx)
                self._mark_header_parameters(i, brace_idx)
                self._walk_expression(i, brace_idx, node)
                return self._finish_block(brace_idx, hi, node)
            if header_words[:1] == ["type"]:
                node = parent.add(Node("type_declaration", first.line, first.line))
                self._walk_expression(i, brace_idx, node)
                return self._finish_block(brace_idx, hi, node)

        if self._looks_like_function(i, brace_idx):
            node = parent.add(Node("function_definition", first.line, first.line,
                                   role="function"))
            self._mark_header_parameters(i, brace_idx)
            self._walk_expression(i, brace_idx, node)
            return self._finish_block(brace_idx, hi, node)

        if self._arrow_before(brace_idx):
            node = parent.add(Node("expression_statement", first.line, first.line))
            self._mark_targets(i, brace_idx)
            self._walk_expression(i, brace_idx, node)
            arrow = node.add(Node("arrow_function", self.tokens[brace_idx].line,
                                  self.tokens[brace_idx].line, role="function"))
            after = self._finish_block(brace_idx, hi, arrow)
            node.end_line = arrow.end_line
            return self._statement_tail(after, hi, node)

        # initializer or composite literal: the brace group belongs to this
        # statement; keep scanning for its terminator
        close = min(self.match.get(brace_idx, hi - 1), hi - 1)
        tail_end, tail_kind = self._scan_statement(close + 1, hi)
        node = parent.add(Node("expression_statement", first.line,
                               self._line(min(max(close, tail_end - 1), hi - 1))))
        self._mark_targets(i, brace_idx)
        self._walk_expression(i, min(tail_end, hi), node)
        return tail_end + 1 if tail_kind == "semi" else tail_end

    def _statement_tail(self, i: int, hi: int, node: Node) -> int:
        if i >= hi:
            return hi
        end, kind = self._scan_statement(i, hi)
        self._walk_expression(i, end, node)
        if end > i:
            node.end_line = max(node.end_line, self._line(min(end - 1, hi - 1)))
        return end + 1 if kind == "semi" else end

    def _arrow_before(self, brace_idx: int) -> bool:
        if self.lang != "javascript":
            return False
        j = brace_idx - 1
        return j >= 0 and self.tokens[j].kind == "op" and self.tokens[j].text == "=>"

    def _looks_like_function(self, i: int, brace_idx: int) -> bool:
        """Header shaped like ``... name ( params ) qualifiers {``."""
        if self.lang == "go":
            return False
        benign = {"::", ":", ",", "<", ">", "&", "*", "->", "]", "[", "..."}
        close = None
        j = brace_idx - 1
        while j >= i:
            t = self.tokens[j]
            if t.kind == "op" and t.text == ")":
                close = j
                break
            if t.kind == "word" or (t.kind == "op" and t.text in benign):
                j -= 1
                continue
            return False
        if close is None:
            return False
        open_idx = self.match.get(close)
        if open_idx is None or open_idx <= i:
            return False
        before = self.tokens[open_idx - 1]
        if before.kind != "word" or before.text in self.keywords:
            return False
        for t in self.tokens[i:open_idx]:
            if t.kind == "op" and t.text in _ASSIGN_OPS:
                return False
            if t.kind == "word" and t.text in ("new", "return", "throw"):
                return False
        return True

    # ------------------------------------------------------------------
    # identifier marking

    def _mark_targets(self, lo: int, hi: int) -> None:
        depth = 0
        for j in range(lo, min(hi, len(self.tokens))):
            t = self.tokens[j]
            if t.kind != "op":
                continue
            if t.text in ("(", "["):
                depth += 1
            elif t.text in (")", "]"):
                depth -= 1
            elif t.text in _ASSIGN_OPS and depth == 0:
                if t.text == ":=":
                    self._mark_short_decl(lo, j)
                else:
                    k = self._target_word(lo, j)
                    if k is not None:
                        self.variable_marks.add(k)

    def _target_word(self, lo: int, op_idx: int) -> int | None:
        j = op_idx - 1
        while j >= lo:
            t = self.tokens[j]
            if t.kind == "op" and t.text in ("]", ")"):
                mate = self.match.get(j)
                j = (mate - 1) if mate is not None else (j - 1)
                continue
            if t.kind == "word" and t.text not in self.keywords:
                return j
            return None
        return None

    def _mark_short_decl(self, lo: int, op_idx: int) -> None:
        j = op_idx - 1
        expect_word = True
        while j >= lo:
            t = self.tokens[j]
            if expect_word and t.kind == "word" and t.text not in self.keywords:
                self.variable_marks.add(j)
                expect_word = False
            elif not expect_word and t.kind == "op" and t.text == ",":
                expect_word = True
            else:
                break
            j -= 1

    def _mark_declaration(self, lo: int, hi: int, kind: str) -> None:
        """Declarations without initializers: ``int x, y;`` / ``let x;`` /
        go ``var x int``. Initialized names are caught by _mark_targets."""
        if lo >= hi:
            return
        first = self.tokens[lo]
        if self.lang in ("javascript", "go"):
            starters = ("var", "let", "const") if self.lang == "javascript" \
                else ("var", "const")
            if first.kind != "word" or first.text not in starters:
                return
            depth = 0
            expect = True
            for j in range(lo + 1, hi):
                t = self.tokens[j]
                if t.kind == "op":
                    if t.text in ("(", "["):
                        depth += 1
                    elif t.text in (")", "]"):
                        depth -= 1
                    elif t.text == "," and depth == 0:
                        expect = True
                    elif t.text in _ASSIGN_OPS and depth == 0:
                        break
                elif t.kind == "word" and expect and depth == 0 and \
                        t.text not in self.keywords:
                    self.variable_marks.add(j)
                    expect = False
            return
        if self.lang == "php" or kind != "semi" or first.kind != "word":
            return
        words = [j for j in range(lo, hi) if self.tokens[j].kind == "word"
                 and self.tokens[j].text not in self.keywords]
        span = self.tokens[lo:min(hi, len(self.tokens))]
        has_assign = any(t.kind == "op" and t.text in _ASSIGN_OPS for t in span)
        has_paren = any(t.kind == "op" and t.text == "(" for t in span)
        allowed_ops = {"<", ">", "::", "*", "&", "[", "]", ",", ".", "..."}
        only_allowed = all(t.kind != "op" or t.text in allowed_ops for t in span)
        if has_assign or has_paren or not only_allowed or len(words) < 2:
            return
        depth = 0
        last_word = None
        for j in range(lo, hi):
            t = self.tokens[j]
            if t.kind == "op":
                if t.text == "[":
                    depth += 1
                elif t.text == "]":
                    depth -= 1
                elif t.text == "," and depth == 0 and last_word is not None:
                    self.variable_marks.add(last_word)
                    last_word = None
            elif t.kind == "word" and t.text not in self.keywords and depth == 0:
                last_word = j
        if last_word is not None:
            self.variable_marks.add(last_word)

    def _mark_header_parameters(self, lo: int, brace_idx: int) -> None:
        for j in range(lo, min(brace_idx, len(self.tokens))):
            t = self.tokens[j]
            if t.kind == "op" and t.text == "(":
                close = self.match.get(j)
                if close is not None and close < brace_idx:
                    self._mark_parameters(j, close)
                return

    def _mark_parameters(self, open_idx: int, close_idx: int) -> None:
        groups: list[list[int]] = [[]]
        depth = 0
        for j in range(open_idx + 1, close_idx):
            t = self.tokens[j]
            if t.kind == "op":
                if t.text in ("(", "[", "{", "<"):
                    depth += 1
                elif t.text in (")", "]", "}", ">"):
                    depth -= 1
                elif t.text == "," and depth == 0:
                    groups.append([])
                    continue
            groups[-1].append(j)
        for group in groups:
            words = [j for j in group if self.tokens[j].kind == "word"
                     and self.tokens[j].text not in self.keywords]
            eq = next((j for j in group if self.tokens[j].kind == "op"
                       and self.tokens[j].text in _ASSIGN_OPS), None)
            if eq is not None:
                words = [j for j in words if j < eq]
            if not words:
                continue
            if self.lang == "go":
                if len(words) >= 2:
                    self.variable_marks.add(words[0])
            elif self.lang in ("javascript", "php"):
                self.variable_marks.add(words[0])
            else:
                self.variable_marks.add(words[-1])

    # ------------------------------------------------------------------
    # expression level

    def _walk_expression(self, lo: int, hi: int, parent: Node) -> None:
        bool_words = _BOOL_WORDS.get(self.lang, frozenset())
        hi = min(hi, len(self.tokens))
        k = lo
        segment_start = lo
        while k < hi:
            t = self.tokens[k]
            if t.kind == "word":
                if t.text in bool_words:
                    parent.add(Node("boolean_operator", t.line, t.line))
                elif t.text in self.keywords:
                    pass
                elif k + 1 < hi and self.tokens[k + 1].kind == "op" and \
                        self.tokens[k + 1].text == "(":
                    close = self.match.get(k + 1)
                    call = parent.add(Node("call_expression", t.line, t.line))
                    call.add(Node("identifier", t.line, t.line,
                                  text=t.text.lstrip("$")))
                    if close is not None and close < hi:
                        call.end_line = self.tokens[close].line
                        self._walk_expression(k + 2, close, call)
                        k = close + 1
                        continue
                    k += 1  # unmatched '(': swallow it
                else:
                    role = "variable" if k in self.variable_marks else None
                    parent.add(Node("identifier", t.line, t.line, role=role,
                                    text=t.text.lstrip("$")))
                k += 1
            elif t.kind == "number":
                parent.add(Node("number_literal", t.line, t.line))
                k += 1
            elif t.kind == "string":
                parent.add(Node("string_literal", t.line, t.line))
                k += 1
            elif t.kind == "op" and t.text in ("(", "["):
                node_type = "parenthesized_expression" if t.text == "(" \
                    else "index_expression"
                close = self.match.get(k)
                group = parent.add(Node(node_type, t.line, t.line))
                if close is not None and close < hi:
                    group.end_line = self.tokens[close].line
                    self._walk_expression(k + 1, close, group)
                    k = close + 1
                else:
                    k += 1
            elif t.kind == "op" and t.text == "{":
                close = self.match.get(k)
                group = parent.add(Node("brace_group", t.line, t.line))
                if close is not None and close < hi:
                    group.end_line = self.tokens[close].line
                    self.parse_statements(k + 1, close, group)
                    k = close + 1
                else:
                    k += 1
            elif t.kind == "op" and t.text in _ASSIGN_OPS:
                parent.add(Node("assignment_expression", t.line, t.line,
                                role="assignment"))
                segment_start = k + 1
                k += 1
            elif t.kind == "op" and t.text in _BOOL_OPS:
                parent.add(Node("boolean_operator", t.line, t.line))
                k += 1
            elif t.kind == "op" and t.text == "?" and self.lang != "php":
                cond = self._text(segment_start, k)
                parent.add(Node("ternary_expression", t.line, t.line,
                                role="decision", text=cond))
                k += 1
            elif t.kind == "op" and t.text == "=>" and self.lang == "javascript":
                # statement-level handling owns "=> {" bodies
                if not (k + 1 < hi and self.tokens[k + 1].kind == "op"
                        and self.tokens[k + 1].text == "{"):
                    arrow = parent.add(Node("arrow_function", t.line, t.line,
                                            role="function"))
                    arrow.end_line = self._line(hi - 1)
                k += 1
            elif t.kind == "op" and t.text == ",":
                segment_start = k + 1
                k += 1
            else:
                k += 1
