"""Tokenizer for EQL query and suggestion text."""

from __future__ import annotations

import re
from dataclasses import dataclass

from eql.errors import EQLSyntaxError

# Characters a backslash turns into literals inside names.
ESCAPABLE = frozenset(":?%_\\(),=<>!.'\"")
# Characters the pretty-printer must escape so a name re-lexes as itself.
_MUST_ESCAPE = frozenset(":?\\(),=<>!")

_FULL_WIDTH = str.maketrans({"？": "?", "：": ":", "（": "(", "）": ")", "，": ","})

KEYWORDS = {
    "and": "and",
    "or": "or",
    "not": "not",
    "true": "true",
    "false": "false",
    "filter": "filter",
    "fileter": "filter",  # misspelling that occurs in real query logs
    "match": "match",
    "order": "order",
    "group": "group",
    "suggest": "suggest",
    "changeto": "changeTo",
}

MAX_Z_INDEX = 50

_VAR_RE = re.compile(r"([xyz])(\d*)")
_BARE_CLAUSE_RE = re.compile(r"(order|group)[ \t]+by\b", re.IGNORECASE)
_BY_RE = re.compile(r"[ \t]+by\b", re.IGNORECASE)
_VAR_DELIMITERS = frozenset(":,().=<>!\\\n")
_NAME_STOP = frozenset(":,()?\\=<>\n")


@dataclass(frozen=True)
class Token:
    kind: str  # NAME VAR ANON COLON COMMA LPAREN RPAREN DOT OP KW REF STRING
    value: str
    line: int
    column: int
    offset: int = 0

    def __repr__(self) -> str:
        return f"{self.kind}({self.value!r})"


def escape_name(text: str, path: bool = False) -> str:
    """Escape ``text`` so that tokenizing it yields the same name."""
    out = []
    for ch in text:
        if ch in _MUST_ESCAPE or (path and ch == "."):
            out.append("\\")
        out.append(ch)
    return "".join(out)


def unescape(text: str) -> str:
    """Decode backslash escapes in a name."""
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text) and text[i + 1] in ESCAPABLE:
            out.append(text[i + 1])
            i += 2
            continue
        out.append(ch)
        i += 1
    return "".join(out)


class _Lexer:
    def __init__(self, text: str):
        self.text = text.translate(_FULL_WIDTH)
        self.pos = 0
        self.tokens: list[Token] = []
        self.line_start = True
        self.path_mode = False

    def where(self, offset: int) -> tuple[int, int]:
        line = self.text.count("\n", 0, offset) + 1
        col = offset - (self.text.rfind("\n", 0, offset) + 1) + 1
        return line, col

    def error(self, message: str, offset: int | None = None):
        line, col = self.where(self.pos if offset is None else offset)
        raise EQLSyntaxError(message, line, col)

    def emit(self, kind: str, value: str, offset: int) -> None:
        line, col = self.where(offset)
        self.tokens.append(Token(kind, value, line, col, offset))
        self.line_start = False

    def run(self) -> list[Token]:
        text = self.text
        n = len(text)
        while self.pos < n:
            ch = text[self.pos]
            start = self.pos
            if ch == "\n":
                self.line_start = True
                self.path_mode = False
                self.pos += 1
                continue
            if ch.isspace():
                self.pos += 1
                continue
            if self.line_start and self._bare_clause():
                continue
            path_mode, self.path_mode = self.path_mode, False
            if ch == "\\" and self.pos + 1 < n and text[self.pos + 1] not in ESCAPABLE:
                self._keyword()
            elif ch == "?":
                self._question()
            elif ch == ":":
                self.emit("COLON", ":", start)
                self.pos += 1
            elif ch == ",":
                self.emit("COMMA", ",", start)
                self.pos += 1
            elif ch == "(":
                self.emit("LPAREN", "(", start)
                self.pos += 1
            elif ch == ")":
                self.emit("RPAREN", ")", start)
                self.pos += 1
            elif ch in "=<>" or (ch == "!" and text.startswith("!=", self.pos)):
                op = text[self.pos:self.pos + 2]
                if op not in ("!=", ">=", "<="):
                    op = ch
                self.emit("OP", op, start)
                self.pos += len(op)
            elif ch in "'\"" and self.tokens and self.tokens[-1].kind == "KW" \
                    and self.tokens[-1].value == "match":
                self._string(ch)
            else:
                self._name(path_mode)
        return self.tokens

    def _bare_clause(self) -> bool:
        """``order by`` / ``group by`` written without the backslash at a line start."""
        if not self.tokens or self.tokens[-1].kind not in ("NAME", "VAR", "RPAREN", "ANON", "STRING"):
            return False
        m = _BARE_CLAUSE_RE.match(self.text, self.pos)
        if not m:
            return False
        self.emit("KW", m.group(1).lower(), self.pos)
        self.pos = m.end()
        return True

    def _keyword(self) -> None:
        start = self.pos
        m = re.compile(r"[A-Za-z]+").match(self.text, self.pos + 1)
        if not m:
            self.error(f"bad escape {self.text[self.pos:self.pos + 2]!r}")
        word = m.group(0)
        end = m.end()
        low = word.lower()
        if low.startswith("ref") and (low == "ref" or low[3:].isdigit()):
            digits = re.compile(r"\d*").match(self.text, end)
            self.emit("REF", word[3:] + digits.group(0), start)
            self.pos = digits.end()
            return
        kw = KEYWORDS.get(low)
        if kw is None:
            self.error(f"bad escape or unknown keyword \\{word}", start)
        self.emit("KW", kw, start)
        self.pos = end
        if kw in ("order", "group"):
            by = _BY_RE.match(self.text, self.pos)
            if by:
                self.pos = by.end()

    def _question(self) -> None:
        text = self.text
        start = self.pos
        j = start + 1
        while j < len(text) and text[j] in " \t":
            j += 1
        m = _VAR_RE.match(text, j)
        after = m.end() if m else j
        glued = m is not None and (after >= len(text) or not (text[after].isalnum() or text[after] == "_"))
        if j == start + 1:
            if glued:
                self._var(m, start)
                return
            if j < len(text) and (text[j].isalnum() or text[j] == "_"):
                word = re.compile(r"\w+").match(text, j).group(0)
                self.error(f"variable name out of range: ?{word}", start)
            self.emit("ANON", "?", start)
            self.pos = start + 1
            return
        if glued:
            k = after
            while k < len(text) and text[k] in " \t":
                k += 1
            if k >= len(text) or text[k] in _VAR_DELIMITERS:
                self._var(m, start)
                return
        self.emit("ANON", "?", start)
        self.pos = start + 1

    def _var(self, m: re.Match, start: int) -> None:
        letter, digits = m.group(1), m.group(2)
        if digits and (letter != "z" or digits.startswith("0") or int(digits) > MAX_Z_INDEX):
            self.error(f"variable name out of range: ?{letter}{digits}", start)
        self.emit("VAR", letter + digits, start)
        self.pos = m.end()
        if self.pos < len(self.text) and self.text[self.pos] == ".":
            self.emit("DOT", ".", self.pos)
            self.pos += 1
            self.path_mode = True

    def _string(self, quote: str) -> None:
        start = self.pos
        i = start + 1
        out = []
        text = self.text
        while i < len(text):
            ch = text[i]
            if ch == "\\" and i + 1 < len(text):
                if text[i + 1] == quote:
                    out.append(quote)
                else:
                    out.append(text[i:i + 2])
                i += 2
                continue
            if ch == quote:
                self.emit("STRING", "".join(out), start)
                self.pos = i + 1
                return
            out.append(ch)
            i += 1
        self.error("unterminated template string", start)

    def _name(self, path_mode: bool) -> None:
        text = self.text
        start = self.pos
        i = start
        out = []
        while i < len(text):
            ch = text[i]
            if ch == "\\":
                if i + 1 < len(text) and text[i + 1] in ESCAPABLE:
                    out.append(text[i + 1])
                    i += 2
                    continue
                break
            if ch in _NAME_STOP or (ch == "!" and text.startswith("!=", i)):
                break
            if ch == "." and path_mode:
                break
            out.append(ch)
            i += 1
        if i == start:
            self.error(f"unexpected character {text[i]!r}", start)
        self.pos = i
        name = " ".join("".join(out).split())
        if name:
            self.emit("NAME", name, start)
        if path_mode and i < len(text) and text[i] == ".":
            self.emit("DOT", ".", i)
            self.pos = i + 1
            self.path_mode = True


def tokenize(text: str) -> list[Token]:
    """Split EQL text into tokens; escapes inside names are decoded."""
    return _Lexer(text).run()
