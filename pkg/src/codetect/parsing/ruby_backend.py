"""Structural parser for ruby's keyword-delimited blocks.

Blocks open with def/class/module/if/unless/case/while/until/for/begin/do
and close with ``end``; brace blocks and hash literals both become brace
groups. Modifier forms (``x = 1 if y``) are recognized as decisions without
opening a block. Heredocs are not given special treatment.
"""

from __future__ import annotations

from .. import lexer
from . import Node, ParseFailure

_ASSIGN_OPS = frozenset(
    {"=", "+=", "-=", "*=", "/=", "%=", "**=", "||=", "&&=", "|=", "&=",
     "^=", "<<=", ">>="}
)
_BOOL_WORDS = frozenset({"and", "or", "not"})
_OPENERS = {
    "def": "method_definition",
    "class": "class_definition",
    "module": "module_definition",
    "begin": "begin_block",
    "case": "case_statement",
    "if": "if_statement",
    "unless": "unless_statement",
    "while": "while_statement",
    "until": "until_statement",
    "for": "for_statement",
}
_CONDITIONAL = frozenset({"if", "unless", "while", "until"})


class RubyBackend:
    language = "ruby"

    def parse(self, code: str) -> Node:
        try:
            tokens = [t for t in lexer.scan(code, "ruby") if t.kind != "comment"]
        except lexer.LexError as exc:
            raise ParseFailure(str(exc)) from exc
        root = Node("program", 1, max(1, code.count("\n") + 1))
        try:
            _RubyWalk(code, tokens).run(root)
        except RecursionError as exc:
            raise ParseFailure("unparsable: nesting too deep") from exc
        return root


class _RubyWalk:
    def __init__(self, code: str, tokens: list):
        self.code = code
        self.tokens = tokens
        self.keywords = lexer.KEYWORDS["ruby"]
        self.marks: set[int] = set()

    def run(self, root: Node) -> None:
        self._mark_assignment_targets()
        stack = [root]
        i = 0
        n = len(self.tokens)
        while i < n:
            t = self.tokens[i]
            top = stack[-1]
            if t.kind == "word" and t.text == "end":
                if len(stack) > 1:
                    node = stack.pop()
                    node.end_line = t.line
                    for ancestor in stack:
                        ancestor.end_line = max(ancestor.end_line, t.line)
                i += 1
            elif t.kind == "word" and t.text == "def":
                node = Node("method_definition", t.line, t.line, role="function")
                top.add(node)
                i = self._def_header(i, node)
                stack.append(node)
            elif t.kind == "word" and t.text in ("class", "module"):
                node = Node(_OPENERS[t.text], t.line, t.line)
                top.add(node)
                i = self._emit_line(i + 1, node, skip_first_word=True)
                stack.append(node)
            elif t.kind == "word" and t.text in _CONDITIONAL:
                node = Node(_OPENERS[t.text], t.line, t.line,
                            role="decision", text="")
                top.add(node)
                i = self._condition(i, node)
                if t.line_first:
                    stack.append(node)
            elif t.kind == "word" and t.text == "elsif":
                node = Node("elsif_clause", t.line, t.line, role="decision", text="")
                top.add(node)
                i = self._condition(i, node)
            elif t.kind == "word" and t.text == "case":
                node = Node("case_statement", t.line, t.line, role="decision", text="")
                top.add(node)
                i = self._condition(i, node)
                stack.append(node)
            elif t.kind == "word" and t.text == "when":
                node = Node("when_clause", t.line, t.line)
                top.add(node)
                i = self._condition(i, node)
            elif t.kind == "word" and t.text == "for":
                node = Node("for_statement", t.line, t.line, role="decision", text="")
                top.add(node)
                i = self._condition(i, node)
                stack.append(node)
            elif t.kind == "word" and t.text == "begin":
                node = Node("begin_block", t.line, t.line)
                top.add(node)
                stack.append(node)
                i += 1
            elif t.kind == "word" and t.text in ("rescue", "ensure", "else", "then"):
                if t.text in ("rescue", "ensure"):
                    top.add(Node(f"{t.text}_clause", t.line, t.line))
                i += 1
            elif t.kind == "word" and t.text == "do":
                node = Node("do_block", t.line, t.line)
                top.add(node)
                stack.append(node)
                i = self._block_params(i + 1)
            elif t.kind == "op" and t.text == "{":
                node = Node("brace_group", t.line, t.line)
                top.add(node)
                stack.append(node)
                i = self._block_params(i + 1)
            elif t.kind == "op" and t.text == "}":
                if len(stack) > 1 and stack[-1].type == "brace_group":
                    node = stack.pop()
                    node.end_line = t.line
                    for ancestor in stack:
                        ancestor.end_line = max(ancestor.end_line, t.line)
                i += 1
            else:
                i = self._emit_one(i, top)
        while len(stack) > 1:
            stack.pop()

    # ------------------------------------------------------------------

    def _line_end(self, i: int) -> int:
        line = self.tokens[i].line
        j = i
        while j < len(self.tokens) and self.tokens[j].line == line:
            j += 1
        return j

    def _condition(self, i: int, node: Node) -> int:
        """Condition text from after the keyword to end of line or 'then';
        a 'do' inside the header (while ... do) is swallowed."""
        stop = self._line_end(i)
        j = i + 1
        limit = j
        while limit < stop:
            t = self.tokens[limit]
            if t.kind == "word" and t.text in ("then", "do"):
                break
            limit += 1
        if limit > j:
            node.text = self.code[self.tokens[j].start:self.tokens[limit - 1].end].strip()
        else:
            node.text = ""
        k = j
        while k < limit:
            k = self._emit_one(k, node)
        if limit < stop and self.tokens[limit].kind == "word" and \
                self.tokens[limit].text in ("then", "do"):
            limit += 1
        return limit

    def _def_header(self, i: int, node: Node) -> int:
        stop = self._line_end(i)
        j = i + 1
        if j < stop and self.tokens[j].kind == "word":
            j += 1  # method name is not a variable
            if j < stop and self.tokens[j].kind == "op" and self.tokens[j].text == ".":
                j += 2  # self.name style
        if j < stop and self.tokens[j].kind == "op" and self.tokens[j].text == "(":
            depth = 0
            k = j
            while k < stop:
                t = self.tokens[k]
                if t.kind == "op" and t.text == "(":
                    depth += 1
                elif t.kind == "op" and t.text == ")":
                    depth -= 1
                    if depth == 0:
                        break
                elif t.kind == "word" and t.text not in self.keywords:
                    prev = self.tokens[k - 1]
                    if prev.kind == "op" and prev.text in ("(", ","):
                        self.marks.add(k)
                k += 1
            j = min(k + 1, stop)
        else:
            # bare parameter list: def name a, b
            expect = True
            while j < stop:
                t = self.tokens[j]
                if t.kind == "word" and expect and t.text not in self.keywords:
                    self.marks.add(j)
                    expect = False
                elif t.kind == "op" and t.text == ",":
                    expect = True
                elif t.kind == "op" and t.text == "=":
                    expect = False  # default value expression
                j += 1
        while j < stop:
            j = self._emit_one(j, node)
        return stop

    def _block_params(self, i: int) -> int:
        """``do |x, y|`` / ``{ |x| ...``: mark the names, consume the bars."""
        if i < len(self.tokens) and self.tokens[i].kind == "op" and \
                self.tokens[i].text == "|":
            j = i + 1
            while j < len(self.tokens):
                t = self.tokens[j]
                if t.kind == "op" and t.text == "|":
                    return j + 1
                if t.kind == "word" and t.text not in self.keywords:
                    self.marks.add(j)
                j += 1
        return i

    def _mark_assignment_targets(self) -> None:
        for j, t in enumerate(self.tokens):
            if t.kind == "op" and t.text in _ASSIGN_OPS and j > 0:
                prev = self.tokens[j - 1]
                if prev.kind == "word" and prev.text not in self.keywords:
                    self.marks.add(j - 1)

    def _emit_line(self, i: int, node: Node, skip_first_word: bool = False) -> int:
        stop = self._line_end(i) if i < len(self.tokens) else i
        j = i
        if skip_first_word and j < stop and self.tokens[j].kind == "word":
            j += 1  # class/module name
        while j < stop:
            j = self._emit_one(j, node)
        return stop

    def _emit_one(self, i: int, parent: Node) -> int:
        t = self.tokens[i]
        if t.kind == "word":
            if t.text in _BOOL_WORDS:
                parent.add(Node("boolean_operator", t.line, t.line))
            elif t.text in self.keywords:
                pass
            elif i + 1 < len(self.tokens) and self.tokens[i + 1].kind == "op" \
                    and self.tokens[i + 1].text == "(" \
                    and self.tokens[i + 1].line == t.line:
                call = parent.add(Node("call_expression", t.line, t.line))
                call.add(Node("identifier", t.line, t.line, text=t.text))
                return i + 1
            else:
                role = "variable" if i in self.marks else None
                parent.add(Node("identifier", t.line, t.line, role=role, text=t.text))
        elif t.kind == "number":
            parent.add(Node("number_literal", t.line, t.line))
        elif t.kind == "string":
            parent.add(Node("string_literal", t.line, t.line))
        elif t.kind == "op":
            if t.text in _ASSIGN_OPS:
                parent.add(Node("assignment_expression", t.line, t.line,
                                role="assignment"))
            elif t.text in ("&&", "||"):
                parent.add(Node("boolean_operator", t.line, t.line))
        return i + 1
