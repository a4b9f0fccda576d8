"""Window arithmetic and span marker handling."""

import pytest

from bridgekit.corpus import Document, Mention, Token
from bridgekit.windows import (
    MarkerError,
    WindowConfig,
    recognition_window,
    resolution_window,
    strip_markers,
    subtype_window_basic,
    subtype_window_end_to_end,
)

from conftest import build_fixture_corpus


def make_doc(n_tokens, sentence_len=10):
    """Synthetic document: tokens t0..tN in fixed-length sentences."""
    tokens = [
        Token(index=i, text=f"t{i}", sentence_index=i // sentence_len)
        for i in range(n_tokens)
    ]
    return Document("syn", tokens, [], [], [])


def test_window_config_validation():
    WindowConfig(0, 0, 0)  # all-zero is legal
    with pytest.raises(ValueError):
        WindowConfig(back_context_tokens=-1)
    with pytest.raises(ValueError):
        WindowConfig(recognition_buffer_tokens=-1)


def test_window_config_defaults():
    cfg = WindowConfig()
    assert cfg.back_context_tokens == 150
    assert cfg.recognition_buffer_tokens == 5
    assert cfg.basic_subtype_buffer_tokens == 10


def test_recognition_window_interior_sentence():
    doc = make_doc(400)
    cfg = WindowConfig()
    w = recognition_window(doc, 20, cfg)  # tokens 200..209
    assert w.target_span == (195, 214)
    assert w.context_span == (45, 194)
    assert w.context_text.split(" ")[0] == "t45"
    assert w.target_text == " ".join(f"t{i}" for i in range(195, 215))


def test_recognition_window_clipped_at_document_start():
    doc = make_doc(30)
    w = recognition_window(doc, 0, WindowConfig())
    assert w.target_span == (0, 14)
    assert w.context_span is None
    assert w.context_text == ""


def test_recognition_window_clipped_at_document_end():
    doc = make_doc(23)
    w = recognition_window(doc, 2, WindowConfig())  # tokens 20..22
    assert w.target_span == (15, 22)


def test_buffer_and_context_never_overlap():
    doc = make_doc(400)
    for s in range(doc.n_sentences):
        w = recognition_window(doc, s, WindowConfig())
        if w.context_span is not None:
            assert w.context_span[1] == w.target_span[0] - 1


def test_resolution_window_markers_and_context():
    corpus = build_fixture_corpus()
    doc = corpus.documents[0]
    w = resolution_window(doc, doc.mention("m5"), WindowConfig())
    assert w.target_text == "{{ The windows }} were broken ."
    assert w.context_text == doc.token_text(0, 20)
    assert w.target_span == (21, 25)


def test_resolution_window_context_capped_at_150():
    doc = make_doc(400)
    doc = Document(
        "syn",
        doc.tokens,
        [Mention(id="a", start=300, end=301, text="t300 t301")],
        [],
        [],
    )
    w = resolution_window(doc, doc.mention("a"), WindowConfig())
    assert w.target_span == (300, 309)
    assert w.context_span == (150, 299)
    assert len(w.context_text.split(" ")) == 150


def test_marker_strip_round_trip():
    corpus = build_fixture_corpus()
    cfg = WindowConfig()
    for doc in corpus.documents:
        for b in doc.gold_bridging:
            anaphor = doc.mention(b.anaphor_id)
            antecedent = doc.mention(b.antecedent_id)
            res = resolution_window(doc, anaphor, cfg)
            assert strip_markers(res.target_text) == doc.token_text(*res.target_span)
            e2e = subtype_window_end_to_end(doc, anaphor, antecedent, cfg)
            full = (
                (e2e.context_text + " " + e2e.target_text)
                if e2e.context_text
                else e2e.target_text
            )
            lo = e2e.context_span[0] if e2e.context_span else e2e.target_span[0]
            assert strip_markers(full) == doc.token_text(lo, e2e.target_span[1])


def test_subtype_end_to_end_both_markers_present():
    corpus = build_fixture_corpus()
    doc = corpus.documents[1]
    w = subtype_window_end_to_end(
        doc, doc.mention("d5"), doc.mention("d4"), WindowConfig()
    )
    text = (w.context_text + " " + w.target_text).strip()
    assert text.split(" ").count("{{") == 1
    assert text.split(" ").count("}}") == 1
    assert text.split(" ").count("*") == 2
    assert "* a smaller dog *" in text
    assert "{{ The others }}" in text


def test_subtype_end_to_end_extends_window_for_far_antecedent(caplog):
    doc = make_doc(400)
    mentions = [
        Mention(id="ant", start=0, end=1, text="t0 t1"),
        Mention(id="ana", start=390, end=391, text="t390 t391"),
    ]
    doc = Document("syn", doc.tokens, mentions, [], [])
    with caplog.at_level("WARNING"):
        w = subtype_window_end_to_end(
            doc, doc.mention("ana"), doc.mention("ant"), WindowConfig()
        )
    assert "extending window" in caplog.text
    assert w.context_span[0] == 0  # stretched back to cover the antecedent
    assert "* t0 t1 *" in w.context_text


def test_subtype_basic_merges_adjacent_excerpts():
    corpus = build_fixture_corpus()
    doc = corpus.documents[1]
    w = subtype_window_basic(doc, doc.mention("d5"), doc.mention("d4"), WindowConfig())
    assert w.context_text == ""
    assert "* a smaller dog *" in w.target_text
    assert "{{ The others }}" in w.target_text
    assert " ... " not in w.target_text


def test_subtype_basic_separated_excerpts_joined_with_ellipsis():
    doc = make_doc(200, sentence_len=10)
    mentions = [
        Mention(id="ant", start=5, end=6, text="t5 t6"),
        Mention(id="ana", start=150, end=151, text="t150 t151"),
    ]
    doc = Document("syn", doc.tokens, mentions, [], [])
    w = subtype_window_basic(doc, doc.mention("ana"), doc.mention("ant"), WindowConfig())
    assert " ... " in w.target_text
    ant_part, ana_part = w.target_text.split(" ... ")
    assert "* t5 t6 *" in ant_part           # antecedent excerpt first
    assert "{{ t150 t151 }}" in ana_part
    # 10-token buffers each side of the enclosing sentences
    assert ant_part.split(" ")[0] == "t0"
    assert ana_part.split(" ")[0] == "t140"


def test_marker_errors():
    doc = make_doc(30)
    a = Mention(id="a", start=5, end=8, text="x")
    b = Mention(id="b", start=7, end=9, text="x")
    same = Mention(id="c", start=5, end=8, text="x")
    later = Mention(id="d", start=20, end=21, text="x")
    with pytest.raises(MarkerError):
        subtype_window_end_to_end(doc, a, b, WindowConfig())  # overlap
    with pytest.raises(MarkerError):
        subtype_window_end_to_end(doc, a, same, WindowConfig())  # equal spans
    with pytest.raises(MarkerError):
        subtype_window_end_to_end(doc, a, later, WindowConfig())  # not preceding


def test_cross_sentence_span_renders_with_warning(caplog):
    doc = make_doc(30, sentence_len=10)
    m = Mention(id="x", start=8, end=12, text="x")  # crosses sentences 0/1
    doc = Document("syn", doc.tokens, [m], [], [])
    with caplog.at_level("WARNING"):
        w = resolution_window(doc, doc.mention("x"), WindowConfig())
    assert "crosses sentence boundary" in caplog.text
    assert w.target_span == (0, 19)
    assert "{{ t8 t9 t10 t11 t12 }}" in w.target_text


def test_strip_markers_only_standalone_tokens():
    assert strip_markers("a {{ b }} c * d *") == "a b c d"
    # Braces glued to words are document text, not markers.
    assert strip_markers("{{x}} a*b") == "{{x}} a*b"
