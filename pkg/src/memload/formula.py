"""Parser for ``response ~ term + term + (1|group)`` model formulas.

Identifiers may contain internal spaces, which become underscores, so
``Memory Load ~ Sentence Length + (1|Language)`` names the columns
``Memory_Load``, ``Sentence_Length`` and ``Language``.  A lone ``1`` on the
right-hand side requests an intercept-only fixed part.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

_TOKEN = re.compile(
    r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_]*(?:[ \t]+[A-Za-z_][A-Za-z0-9_]*)*)"
    r"|(?P<one>1)|(?P<op>[~+()|]))"
)


class FormulaError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        self.pos = pos
        pointer = " " * pos + "^"
        super().__init__(f"{message} at position {pos}\n  {text}\n  {pointer}")


@dataclass(frozen=True)
class ModelSpec:
    response: str
    fixed_terms: tuple[str, ...]
    group: str

    def __post_init__(self):
        if len(set(self.fixed_terms)) != len(self.fixed_terms):
            raise ValueError("duplicate fixed-effect terms")
        if self.response in self.fixed_terms or self.group in self.fixed_terms:
            raise ValueError("response and group cannot also be fixed terms")
        if self.response == self.group:
            raise ValueError("response and group must differ")

    def render(self) -> str:
        rhs = " + ".join(self.fixed_terms) if self.fixed_terms else "1"
        return f"{self.response} ~ {rhs} + (1|{self.group})"

    __str__ = render


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise FormulaError(f"unexpected character {text[bad]!r}", text, bad)
        kind = m.lastgroup
        value = m.group(kind)
        start = m.start(kind)
        if kind == "ident":
            value = re.sub(r"[ \t]+", "_", value)
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def parse_formula(text: str) -> ModelSpec:
    toks = _tokenize(text)
    i = 0

    def peek():
        return toks[i]

    def expect(kind, value=None, what=None):
        nonlocal i
        k, v, p = toks[i]
        if k != kind or (value is not None and v != value):
            want = what or (repr(value) if value else kind)
            got = "end of formula" if k == "end" else repr(v)
            raise FormulaError(f"expected {want}, found {got}", text, p)
        i += 1
        return v, p

    response, _ = expect("ident", what="response column name")
    expect("op", "~")

    terms: list[str] = []
    group = None
    intercept_only = False
    while True:
        k, v, p = peek()
        if k == "ident":
            if intercept_only:
                raise FormulaError("'1' cannot be combined with other fixed terms", text, p)
            if v in terms:
                raise FormulaError(f"duplicate fixed term {v!r}", text, p)
            terms.append(v)
            i += 1
        elif k == "one" and not terms and not intercept_only:
            intercept_only = True
            i += 1
        elif k == "op" and v == "(":
            if group is not None:
                raise FormulaError("only one random-intercept clause is allowed", text, p)
            if not terms and not intercept_only:
                raise FormulaError("at least one fixed term (or '1') must precede the random clause", text, p)
            i += 1
            expect("one", what="'1' (random intercepts only)")
            expect("op", "|")
            group, _ = expect("ident", what="grouping column name")
            expect("op", ")")
        elif k == "end":
            raise FormulaError("random-intercept clause '(1|group)' required", text, p)
        else:
            raise FormulaError(f"unexpected {v!r}", text, p)

        k, v, p = peek()
        if k == "end":
            if group is None:
                raise FormulaError("random-intercept clause '(1|group)' required", text, p)
            break
        if group is not None:
            if k == "op" and v == "+" and toks[i + 1][1] == "(":
                raise FormulaError("only one random-intercept clause is allowed", text, toks[i + 1][2])
            raise FormulaError("the random-intercept clause must come last", text, p)
        expect("op", "+")

    if response in terms:
        raise FormulaError(f"response {response!r} also appears as a fixed term", text, 0)
    if group in terms or group == response:
        raise FormulaError(f"grouping column {group!r} also used elsewhere", text, 0)
    return ModelSpec(response, tuple(terms), group)
