"""Reading CoNLL-U treebank files into sentence records.

Only basic dependencies are used.  Multiword-token range rows (``3-4``) are
kept as spans and empty nodes (``5.1``) are only counted, so the token list
of a record is always the contiguous sequence of syntactic words 1..n.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator, Optional

logger = logging.getLogger(__name__)

UNKNOWN = "unknown"
N_COLUMNS = 10


class ConlluError(ValueError):
    """A malformed sentence block.

    Carries the source name, the 1-based line number and the character
    offset of the offending line so corpus-scale runs can report it.
    """

    def __init__(self, message: str, source: str = "<stream>", line: int = 0, offset: int = 0):
        self.source = source
        self.line = line
        self.offset = offset
        self.reason = message
        super().__init__(f"{source}:{line} (offset {offset}): {message}")


@dataclass(frozen=True)
class TokenRow:
    id: int
    form: str
    lemma: str
    upos: str
    xpos: Optional[str]
    feats: Optional[str]
    head: int
    deprel: str
    deps: Optional[str] = None
    misc: Optional[str] = None


@dataclass
class SentenceRecord:
    language: str
    sent_id: str
    metadata: dict[str, str] = field(default_factory=dict)
    tokens: list[TokenRow] = field(default_factory=list)
    mwt_spans: list[tuple[int, int]] = field(default_factory=list)
    empty_nodes: int = 0


@dataclass(frozen=True)
class Block:
    """Raw text of one sentence block with its position in the source."""

    source: str
    index: int
    line: int
    offset: int
    text: str


def _optional(value: str) -> Optional[str]:
    return None if value == "_" else value


def _label(value: str) -> str:
    return UNKNOWN if value in ("_", "") else value


def decode(data: bytes | str, source: str = "<stream>") -> str:
    if isinstance(data, str):
        return data
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = data.count(b"\n", 0, exc.start) + 1
        raise ConlluError(f"invalid UTF-8 byte at {exc.start}", source, line, exc.start) from None


def split_blocks(data: bytes | str, source: str = "<stream>") -> Iterator[Block]:
    """Yield the blank-line separated sentence blocks of a document.

    Cheap: no columns are parsed, which lets callers sample blocks before
    paying for the full parse.
    """
    text = decode(data, source)
    if text.startswith("﻿"):
        text = text[1:]
    lines: list[str] = []
    start_line = start_offset = 0
    offset = 0
    index = 0
    for lineno, raw in enumerate(text.splitlines(keepends=True), start=1):
        line = raw.rstrip("\r\n")
        if line.strip() == "":
            if lines:
                index += 1
                yield Block(source, index, start_line, start_offset, "\n".join(lines))
                lines = []
        else:
            if not lines:
                start_line, start_offset = lineno, offset
            lines.append(line)
        offset += len(raw)
    if lines:
        index += 1
        yield Block(source, index, start_line, start_offset, "\n".join(lines))


def _parse_int(value: str, what: str, err) -> int:
    if not value.isascii() or not value.isdigit():
        raise err(f"non-integer {what} {value!r}")
    return int(value)


def parse_block(block: Block, language: str) -> SentenceRecord:
    """Parse one sentence block; raises :class:`ConlluError` when malformed."""
    metadata: dict[str, str] = {}
    tokens: list[TokenRow] = []
    spans: list[tuple[int, int]] = []
    empty = 0
    offset = block.offset
    for i, line in enumerate(block.text.split("\n")):
        lineno = block.line + i

        def err(msg: str) -> ConlluError:
            return ConlluError(msg, block.source, lineno, offset)

        if line.startswith("#"):
            body = line[1:].strip()
            key, sep, value = body.partition("=")
            key = key.strip()
            if key and key not in metadata:
                metadata[key] = value.strip() if sep else ""
            offset += len(line) + 1
            continue

        cols = line.split("\t")
        if len(cols) != N_COLUMNS:
            raise err(f"expected {N_COLUMNS} tab-separated columns, found {len(cols)}")
        tid = cols[0]
        if "-" in tid:
            lo, _, hi = tid.partition("-")
            a, b = _parse_int(lo, "range start", err), _parse_int(hi, "range end", err)
            if not 1 <= a < b:
                raise err(f"invalid multiword range {tid!r}")
            spans.append((a, b))
        elif "." in tid:
            major, _, minor = tid.partition(".")
            _parse_int(major, "empty node id", err)
            _parse_int(minor, "empty node id", err)
            empty += 1
        else:
            wid = _parse_int(tid, "id", err)
            if wid != len(tokens) + 1:
                raise err(f"token id {wid} out of sequence (expected {len(tokens) + 1})")
            head = _parse_int(cols[6], "head", err)
            if head == wid:
                raise err(f"token {wid} is its own head")
            tokens.append(
                TokenRow(
                    id=wid,
                    form=cols[1],
                    lemma=cols[2],
                    upos=_label(cols[3]),
                    xpos=_optional(cols[4]),
                    feats=_optional(cols[5]),
                    head=head,
                    deprel=_label(cols[7]),
                    deps=_optional(cols[8]),
                    misc=_optional(cols[9]),
                )
            )
        offset += len(line) + 1

    sent_id = metadata.get("sent_id") or f"{block.source}:{block.index}"
    return SentenceRecord(language, sent_id, metadata, tokens, spans, empty)


def parse_document(
    data: bytes | str,
    language: str,
    source: str = "<stream>",
    errors: Optional[list[ConlluError]] = None,
) -> list[SentenceRecord]:
    """Parse a whole CoNLL-U document.

    With ``errors=None`` the first malformed block raises.  Passing a list
    switches to skip-with-warning: bad blocks are appended to it and left
    out of the result.  Blocks holding only comments produce no record.
    """
    records = []
    try:
        blocks = list(split_blocks(data, source))
    except ConlluError as exc:
        if errors is None:
            raise
        logger.warning("skipping %s", exc)
        errors.append(exc)
        return records
    for block in blocks:
        try:
            record = parse_block(block, language)
        except ConlluError as exc:
            if errors is None:
                raise
            logger.warning("skipping sentence: %s", exc)
            errors.append(exc)
            continue
        if record.tokens:
            records.append(record)
    return records


def sentence_text(record: SentenceRecord) -> str:
    if "text" in record.metadata:
        return record.metadata["text"]
    return " ".join(t.form for t in record.tokens)


def format_sentence(record: SentenceRecord) -> str:
    """Re-emit a record as a CoNLL-U block (word rows and range rows)."""

    def col(v: Optional[str]) -> str:
        return "_" if v is None else v

    out = [f"# {k} = {v}" if v else f"# {k}" for k, v in record.metadata.items()]
    spans = {a: b for a, b in record.mwt_spans}
    for t in record.tokens:
        if t.id in spans:
            out.append(f"{t.id}-{spans[t.id]}" + "\t_" * 9)
        out.append(
            "\t".join(
                [str(t.id), t.form, t.lemma, t.upos, col(t.xpos), col(t.feats),
                 str(t.head), t.deprel, col(t.deps), col(t.misc)]
            )
        )
    return "\n".join(out) + "\n"
