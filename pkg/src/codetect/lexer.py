"""String-aware lexical scanners for the supported languages.

One scanner per language family, all emitting the same flat token stream.
Comment and string tokens carry their full source span, which is what the
QA comment stripper and the Halstead counters need. The scanners are
deliberately lossy about language semantics (no grammar here), but they are
exact about where strings and comments begin and end, which is the part a
regex cannot get right.
"""

from __future__ import annotations

from dataclasses import dataclass

SUPPORTED_LANGUAGES = (
    "python",
    "java",
    "cpp",
    "csharp",
    "go",
    "javascript",
    "php",
    "ruby",
)

# kinds: word, number, string, op, comment
@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    start: int  # offset into source
    end: int    # exclusive
    line: int   # 1-based line of start
    depth: int  # bracket depth at token start
    line_first: bool  # first non-whitespace token on its physical line


_WORD_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_WORD_CHARS = _WORD_START | set("0123456789")
_DIGITS = set("0123456789")

# longest-match operator list shared across languages; a superset is harmless
# because unknown sequences fall back to single-char op tokens
_OPERATORS = [
    ">>>=", "<<<",
    "...", "===", "!==", ">>>", "<=>", "**=", "//=", ">>=", "<<=",
    "->", "=>", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "**",
    "//", ":=", "?.", "??",
]

_LINE_COMMENTS = {
    "python": ("#",),
    "java": ("//",),
    "cpp": ("//",),
    "csharp": ("//",),
    "go": ("//",),
    "javascript": ("//",),
    "php": ("//", "#"),
    "ruby": ("#",),
}

_BLOCK_COMMENTS = {
    "java": ("/*", "*/"),
    "cpp": ("/*", "*/"),
    "csharp": ("/*", "*/"),
    "go": ("/*", "*/"),
    "javascript": ("/*", "*/"),
    "php": ("/*", "*/"),
}

KEYWORDS = {
    "python": frozenset(
        """False None True and as assert async await break class continue def
        del elif else except finally for from global if import in is lambda
        nonlocal not or pass raise return try while with yield match case""".split()
    ),
    "java": frozenset(
        """abstract assert boolean break byte case catch char class const
        continue default do double else enum extends final finally float for
        goto if implements import instanceof int interface long native new
        package private protected public return short static strictfp super
        switch synchronized this throw throws transient try void volatile
        while var record sealed permits yield""".split()
    ),
    "cpp": frozenset(
        """alignas alignof and and_eq asm auto bitand bitor bool break case
        catch char char16_t char32_t class compl const constexpr const_cast
        continue decltype default delete do double dynamic_cast else enum
        explicit export extern false float for friend goto if inline int long
        mutable namespace new noexcept not not_eq nullptr operator or or_eq
        private protected public register reinterpret_cast return short signed
        sizeof static static_assert static_cast struct switch template this
        thread_local throw true try typedef typeid typename union unsigned
        using virtual void volatile wchar_t while xor xor_eq""".split()
    ),
    "csharp": frozenset(
        """abstract as base bool break byte case catch char checked class
        const continue decimal default delegate do double else enum event
        explicit extern false finally fixed float for foreach goto if implicit
        in int interface internal is lock long namespace new null object
        operator out override params private protected public readonly ref
        return sbyte sealed short sizeof stackalloc static string struct
        switch this throw true try typeof uint ulong unchecked unsafe ushort
        using var virtual void volatile while async await yield""".split()
    ),
    "go": frozenset(
        """break case chan const continue default defer else fallthrough for
        func go goto if import interface map package range return select
        struct switch type var""".split()
    ),
    "javascript": frozenset(
        """await break case catch class const continue debugger default delete
        do else enum export extends false finally for function if import in
        instanceof let new null of return static super switch this throw true
        try typeof undefined var void while with yield async""".split()
    ),
    "php": frozenset(
        """abstract and array as break callable case catch class clone const
        continue declare default do echo else elseif empty enddeclare endfor
        endforeach endif endswitch endwhile enum extends final finally fn for
        foreach function global goto if implements include include_once
        instanceof insteadof interface isset list match namespace new or print
        private protected public readonly require require_once return static
        switch throw trait try unset use var while xor yield true false
        null""".split()
    ),
    "ruby": frozenset(
        """BEGIN END alias and begin break case class def defined? do else
        elsif end ensure false for if in module next nil not or redo rescue
        retry return self super then true undef unless until when while
        yield""".split()
    ),
}


class LexError(ValueError):
    pass


def is_supported(language: str) -> bool:
    return language in SUPPORTED_LANGUAGES


def scan(code: str, language: str) -> list[Token]:
    """Tokenize ``code``, including comment and string tokens.

    Raises LexError for languages without a registered grammar.
    """
    if not is_supported(language):
        raise LexError(f"no comment grammar for language {language!r}")
    return _Scanner(code, language).run()


class _Scanner:
    def __init__(self, code: str, language: str):
        self.code = code
        self.lang = language
        self.n = len(code)
        self.i = 0
        self.line = 1
        self.depth = 0
        self.line_has_token = False
        self.tokens: list[Token] = []

    def run(self) -> list[Token]:
        while self.i < self.n:
            c = self.code[self.i]
            if c == "\n":
                self.line += 1
                self.line_has_token = False
                self.i += 1
            elif c in " \t\r\f\v":
                self.i += 1
            elif self._try_comment():
                pass
            elif self._try_string():
                pass
            elif c in _WORD_START or (self.lang == "php" and c == "$"):
                self._word()
            elif c in _DIGITS:
                self._number()
            else:
                self._operator()
        return self.tokens

    # -- emit helpers ------------------------------------------------

    def _emit(self, kind: str, start: int, end: int, line: int, first: bool):
        self.tokens.append(
            Token(kind, self.code[start:end], start, end, line, self.depth, first)
        )

    def _begin(self) -> tuple[int, int, bool]:
        first = not self.line_has_token
        self.line_has_token = True
        return self.i, self.line, first

    def _advance_through(self, end: int):
        self.line += self.code.count("\n", self.i, end)
        self.i = end

    # -- comments ----------------------------------------------------

    def _try_comment(self) -> bool:
        code, i = self.code, self.i
        if self.lang == "ruby" and code.startswith("=begin", i) and self._at_line_start():
            start, line, first = self._begin()
            end = code.find("\n=end", i)
            if end == -1:
                end = self.n
            else:
                end = code.find("\n", end + 1)
                end = self.n if end == -1 else end
            self._advance_through(end)
            self._emit("comment", start, end, line, first)
            return True
        block = _BLOCK_COMMENTS.get(self.lang)
        if block and code.startswith(block[0], i):
            start, line, first = self._begin()
            close = code.find(block[1], i + len(block[0]))
            end = self.n if close == -1 else close + len(block[1])
            self._advance_through(end)
            self._emit("comment", start, end, line, first)
            return True
        for marker in _LINE_COMMENTS[self.lang]:
            if code.startswith(marker, i):
                start, line, first = self._begin()
                end = code.find("\n", i)
                end = self.n if end == -1 else end
                self._advance_through(end)
                self._emit("comment", start, end, line, first)
                return True
        return False

    def _at_line_start(self) -> bool:
        j = self.i - 1
        while j >= 0 and self.code[j] in " \t":
            j -= 1
        return j < 0 or self.code[j] == "\n"

    # -- strings -----------------------------------------------------

    def _try_string(self) -> bool:
        lang, code, i = self.lang, self.code, self.i
        c = code[i]
        if lang == "python":
            j = i
            while j < self.n and code[j] in "rRbBuUfF" and j - i < 3:
                j += 1
            if j < self.n and code[j] in "\"'":
                raw = any(ch in "rR" for ch in code[i:j])
                return self._python_string(i, j, raw)
            return False
        if lang == "cpp" and code.startswith('R"', i):
            return self._cpp_raw_string()
        if lang == "csharp":
            j = i
            while j < self.n and code[j] in "@$":
                j += 1
            if j > i and j < self.n and code[j] == '"':
                verbatim = "@" in code[i:j]
                return self._simple_string(i, j, '"', escapes=not verbatim,
                                           double_quote_escape=verbatim)
        if lang == "java" and code.startswith('"""', i):
            return self._delimited(i, i + 3, '"""')
        if lang in ("go", "javascript") and c == "`":
            return self._delimited(i, i + 1, "`", escapes=(lang == "javascript"))
        if lang == "php" and code.startswith("<<<", i):
            return self._php_heredoc()
        if c in "\"'":
            if lang == "go" and c == "'":
                return self._simple_string(i, i, "'")
            return self._simple_string(i, i, c)
        return False

    def _python_string(self, start: int, quote_pos: int, raw: bool) -> bool:
        code = self.code
        q = code[quote_pos]
        if code.startswith(q * 3, quote_pos):
            return self._delimited(start, quote_pos + 3, q * 3, escapes=not raw)
        return self._simple_string(start, quote_pos, q, escapes=not raw)

    def _simple_string(self, start: int, quote_pos: int, quote: str,
                       escapes: bool = True, double_quote_escape: bool = False) -> bool:
        code, n = self.code, self.n
        _, line, first = self._begin()
        j = quote_pos + 1
        while j < n:
            c = code[j]
            if escapes and c == "\\":
                j += 2
                continue
            if double_quote_escape and code.startswith(quote * 2, j):
                j += 2
                continue
            if c == quote:
                j += 1
                break
            if c == "\n":
                break  # unterminated single-line string: stop at EOL
            j += 1
        end = min(j, n)
        self._advance_through(end)
        self._emit("string", start, end, line, first)
        return True

    def _delimited(self, start: int, body: int, closer: str, escapes: bool = True) -> bool:
        code = self.code
        _, line, first = self._begin()
        j = body
        while j < self.n:
            if escapes and code[j] == "\\":
                j += 2
                continue
            if code.startswith(closer, j):
                j += len(closer)
                break
            j += 1
        end = min(j, self.n)
        self._advance_through(end)
        self._emit("string", start, end, line, first)
        return True

    def _cpp_raw_string(self) -> bool:
        code, i = self.code, self.i
        _, line, first = self._begin()
        p = code.find("(", i + 2)
        if p == -1 or p - (i + 2) > 16:
            return self._simple_string(i, i + 1, '"')
        delim = code[i + 2:p]
        closer = ")" + delim + '"'
        close = code.find(closer, p + 1)
        end = self.n if close == -1 else close + len(closer)
        self._advance_through(end)
        self._emit("string", i, end, line, first)
        return True

    def _php_heredoc(self) -> bool:
        code, i = self.code, self.i
        j = i + 3
        while j < self.n and code[j] in " \t":
            j += 1
        quote = ""
        if j < self.n and code[j] in "'\"":
            quote = code[j]
            j += 1
        k = j
        while k < self.n and code[k] in _WORD_CHARS:
            k += 1
        if k == j:
            self._operator()
            return True
        label = code[j:k]
        if quote and k < self.n and code[k] == quote:
            k += 1
        _, line, first = self._begin()
        pos = k
        end = self.n
        while True:
            nl = code.find("\n", pos)
            if nl == -1:
                break
            rest = code[nl + 1:]
            stripped = rest.lstrip(" \t")
            if stripped.startswith(label):
                tail = stripped[len(label):]
                if tail[:1] in ("", ";", ",", ")", "\n", "\r"):
                    end = nl + 1 + (len(rest) - len(stripped)) + len(label)
                    break
            pos = nl + 1
        self._advance_through(end)
        self._emit("string", i, end, line, first)
        return True

    # -- words / numbers / operators ----------------------------------

    def _word(self):
        start, line, first = self._begin()
        j = self.i
        if self.code[j] == "$":
            j += 1
        while j < self.n and self.code[j] in _WORD_CHARS:
            j += 1
        if self.lang == "ruby" and j < self.n and self.code[j] in "?!":
            j += 1
        self.i = j
        self._emit("word", start, j, line, first)

    def _number(self):
        start, line, first = self._begin()
        j = self.i
        while j < self.n and (self.code[j] in _WORD_CHARS or self.code[j] == "."):
            # a trailing dot followed by non-digit belongs to the next token
            if self.code[j] == "." and (j + 1 >= self.n or self.code[j + 1] not in _DIGITS):
                break
            j += 1
        self.i = j
        self._emit("number", start, j, line, first)

    def _operator(self):
        start, line, first = self._begin()
        for op in _OPERATORS:
            if self.code.startswith(op, start):
                self.i = start + len(op)
                self._emit("op", start, self.i, line, first)
                return
        c = self.code[start]
        if c in "([{":
            self.depth += 1
        self.i = start + 1
        self._emit("op", start, self.i, line, first)
        if c in ")]}":
            self.depth = max(0, self.depth - 1)
