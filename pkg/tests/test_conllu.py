import pytest
from hypothesis import given, settings, strategies as st

from memload.conllu import (
    UNKNOWN,
    ConlluError,
    SentenceRecord,
    format_sentence,
    parse_document,
    sentence_text,
    split_blocks,
)


def row(i, form, head, rel="dep", upos="X"):
    return f"{i}\t{form}\t{form}\t{upos}\t_\t_\t{head}\t{rel}\t_\t_"


TWO = "\n".join([
    "# sent_id = s1", "# text = Il pleut.",
    row(1, "Il", 2, "expl"), row(2, "pleut", 0, "root"), row(3, ".", 2, "punct"),
    "",
    "# text = Oui.",
    row(1, "Oui", 0, "root"), row(2, ".", 1, "punct"),
    "",
])


def test_two_sentences_with_text():
    recs = parse_document(TWO.encode(), "fr", source="f.conllu")
    assert len(recs) == 2
    assert recs[0].metadata["text"] == "Il pleut."
    assert recs[1].metadata["text"] == "Oui."
    assert recs[0].sent_id == "s1"
    assert recs[1].sent_id == "f.conllu:2"
    assert [t.id for t in recs[0].tokens] == [1, 2, 3]


def test_multiword_range_excluded_from_tokens():
    text = "\n".join([
        row(1, "I", 4), "2-3\tdon't\t_\t_\t_\t_\t_\t_\t_\t_",
        row(2, "do", 4), row(3, "n't", 4), row(4, "know", 0, "root"), row(5, ".", 4),
    ])
    (rec,) = parse_document(text, "en")
    assert [t.id for t in rec.tokens] == [1, 2, 3, 4, 5]
    assert rec.mwt_spans == [(2, 3)]


def test_spec_range_row_three_four():
    text = "\n".join([row(1, "a", 3), row(2, "b", 3), "3-4\tdon't\t_\t_\t_\t_\t_\t_\t_\t_",
                      row(3, "do", 0, "root"), row(4, "n't", 3)])
    (rec,) = parse_document(text, "en")
    assert rec.mwt_spans == [(3, 4)]
    assert [t.id for t in rec.tokens] == [1, 2, 3, 4]


def test_empty_nodes_counted_not_tokens():
    text = "\n".join([row(1, "a", 0, "root"), "1.1\tx\tx\tVERB\t_\t_\t_\t_\t0:root\t_", row(2, "b", 1)])
    (rec,) = parse_document(text, "en")
    assert rec.empty_nodes == 1
    assert len(rec.tokens) == 2


def test_bad_head_names_line():
    text = "# text = x\n" + row(1, "a", 0, "root") + "\n" + row(2, "b", "x") + "\n"
    with pytest.raises(ConlluError) as exc:
        parse_document(text, "en", source="bad.conllu")
    assert exc.value.line == 3
    assert "bad.conllu:3" in str(exc.value)


@pytest.mark.parametrize("line", [
    "1\ta\ta\tX\t_\t_\t0\troot\t_",           # 9 columns
    "one\ta\ta\tX\t_\t_\t0\troot\t_\t_",      # non-integer id
    "2\ta\ta\tX\t_\t_\t0\troot\t_\t_",        # gap in ids
    "1\ta\ta\tX\t_\t_\t1\troot\t_\t_",        # own head
    "1\ta\ta\tX\t_\t_\t-1\troot\t_\t_",       # negative head
])
def test_malformed_rows(line):
    with pytest.raises(ConlluError):
        parse_document(line, "en")


def test_lenient_collects_errors_and_keeps_good_sentences():
    text = TWO + "\n" + row(1, "a", "x") + "\n\n" + row(1, "z", 0, "root") + "\n"
    errors = []
    recs = parse_document(text, "fr", errors=errors)
    assert len(recs) == 3
    assert len(errors) == 1 and errors[0].line == 11


def test_underscore_labels_normalised():
    (rec,) = parse_document("1\ta\ta\t_\t_\t_\t0\t_\t_\t_", "en")
    assert rec.tokens[0].upos == UNKNOWN
    assert rec.tokens[0].deprel == UNKNOWN
    assert rec.tokens[0].xpos is None


def test_crlf_and_bom():
    text = "﻿# text = A\r\n" + row(1, "A", 0, "root") + "\r\n\r\n"
    (rec,) = parse_document(text.encode("utf-8"), "en")
    assert rec.metadata == {"text": "A"}
    assert rec.tokens[0].misc is None


def test_invalid_utf8_is_structured_error():
    with pytest.raises(ConlluError):
        parse_document(b"1\t\xff\tx\tX\t_\t_\t0\troot\t_\t_", "en")
    errors = []
    assert parse_document(b"\xff\xfe", "en", errors=errors) == []
    assert len(errors) == 1


def test_comment_only_block_gives_no_record():
    assert parse_document("# newdoc\n\n", "en") == []
    assert len(list(split_blocks("# newdoc\n\n"))) == 1


def test_sentence_text():
    rec = SentenceRecord("fr", "s", {"text": "Il pleut."})
    assert sentence_text(rec) == "Il pleut."
    (rec,) = parse_document(row(1, "a", 0, "root") + "\n" + row(2, "b", 1), "en")
    assert sentence_text(rec) == "a b"
    assert sentence_text(SentenceRecord("en", "s")) == ""


def test_fixture_files_parse(data_dir):
    for path in sorted((data_dir / "corpus").rglob("*.conllu")):
        recs = parse_document(path.read_bytes(), path.parent.name, source=path.name)
        assert len(recs) >= 4
        for r in recs:
            assert [t.id for t in r.tokens] == list(range(1, len(r.tokens) + 1))


labels = st.sampled_from(["nsubj", "obj", "det", "root", "_", "nmod:poss"])
forms = st.text(alphabet=st.characters(blacklist_categories=("Cc", "Cs", "Zl", "Zp"),
                                       blacklist_characters="\t\n\r\x85\x0b\x0c\x1c\x1d\x1e"),
                min_size=1, max_size=6)


@st.composite
def records(draw):
    n = draw(st.integers(1, 8))
    lines = []
    meta = draw(st.dictionaries(st.from_regex(r"[a-z_]{1,8}", fullmatch=True),
                                st.from_regex(r"[A-Za-z0-9 .,]{0,12}[A-Za-z0-9.,]", fullmatch=True),
                                max_size=3))
    for k, v in meta.items():
        lines.append(f"# {k} = {v}")
    for i in range(1, n + 1):
        head = draw(st.integers(0, n).filter(lambda h, i=i: h != i))
        form = draw(forms)
        lines.append(f"{i}\t{form}\t{form}\t{draw(st.sampled_from(['NOUN', 'VERB', '_']))}\t_\t_\t{head}\t{draw(labels)}\t_\t_")
    return "\n".join(lines) + "\n"


@settings(max_examples=200, deadline=None)
@given(records())
def test_round_trip(text):
    (rec,) = parse_document(text, "xx", source="t")
    (again,) = parse_document(format_sentence(rec), "xx", source="t")
    assert again == rec
    assert list(again.metadata) == list(rec.metadata)


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=300))
def test_never_crashes_on_bytes(data):
    errors = []
    recs = parse_document(data, "xx", errors=errors)
    for r in recs:
        assert [t.id for t in r.tokens] == list(range(1, len(r.tokens) + 1))
