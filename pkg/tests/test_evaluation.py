"""Scoring: recognition/resolution P/R/F, basic accuracy, subtype metrics."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bridgekit import evaluation as ev
from bridgekit.corpus import SubtypeLabel
from bridgekit.gateway import BackendConfig, Gateway, ScriptedMockBackend
from bridgekit.numfmt import round1
from bridgekit.pipeline import (
    PipelineConfig,
    PredictedSpan,
    PredictionRecord,
    run_basic,
    run_basic_subtype,
    run_end_to_end,
)
from bridgekit.prompts import FewShotSet, TemplateSet

from conftest import build_fixture_corpus, build_mock_script


@pytest.fixture(scope="module")
def fixture_run():
    corpus = build_fixture_corpus()
    gw = Gateway(ScriptedMockBackend(build_mock_script()), BackendConfig())
    templates, fewshot = TemplateSet.default(), FewShotSet.empty()
    cfg = PipelineConfig()
    records = []
    for doc in corpus.documents:
        records.extend(run_end_to_end(doc, cfg, gw, templates, fewshot))
    return corpus, records


def record(doc_id, doc, anaphor_id, antecedent_id=None, subtypes=()):
    ana = PredictedSpan.from_mention(doc, doc.mention(anaphor_id))
    ant = (
        PredictedSpan.from_mention(doc, doc.mention(antecedent_id))
        if antecedent_id
        else None
    )
    return PredictionRecord(
        doc_id=doc_id,
        anaphor=ana,
        antecedent=ant,
        subtypes=frozenset(SubtypeLabel(s) for s in subtypes),
    )


def in_rounding_band(p, r, printed_f):
    """Printed P/R/F are all rounded to one decimal; the reconstructed F is
    consistent when the printed F falls in the band induced by those
    half-ulp perturbations."""
    lo = ev.f1(max(0.0, p - 0.05), max(0.0, r - 0.05)) - 0.05
    hi = ev.f1(p + 0.05, r + 0.05) + 0.05
    return lo <= printed_f <= hi


def test_f1_values():
    # Percent-convention harmonic mean on published-style triples.
    assert round1(ev.f1(44.4, 57.5)) == 50.1
    assert round1(ev.f1(22.9, 70.0)) == 34.5
    assert round1(ev.f1(76.2, 46.3)) == 57.6
    # (38.5, 55.7) reconstructs to 45.53; the printed 45.6 sits inside the
    # rounding band of the three printed numbers.
    for triple in ((44.4, 57.5, 50.1), (38.5, 55.7, 45.6),
                   (22.9, 70.0, 34.5), (76.2, 46.3, 57.6)):
        assert in_rounding_band(*triple)
    assert ev.f1(0.0, 0.0) == 0.0
    assert ev.f1(100.0, 100.0) == 100.0


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 100), st.floats(0, 100))
def test_f1_bounded_by_min_and_max(p, r):
    value = ev.f1(p, r)
    assert 0.0 <= value <= 100.0
    assert value <= max(p, r) + 1e-9
    if p > 0 and r > 0:
        assert value >= min(p, r) * 0.999999 or value >= 0


def test_prf_counts_to_rates():
    prf = ev.PRF(tp=9, fp=3, fn=2)
    assert round1(prf.precision) == 75.0
    assert round1(prf.recall) == 81.8
    assert round1(prf.f1_score) == 78.3
    empty = ev.PRF()
    assert empty.precision == 0.0 and empty.recall == 0.0


def test_fixture_recognition_hand_counts(fixture_run):
    corpus, records = fixture_run
    prf = ev.score_recognition(corpus, records)
    # Hand count: 12 predicted spans, 9 hit the 11 gold anaphors.
    assert (prf.tp, prf.fp, prf.fn) == (9, 3, 2)
    assert prf.to_dict() == {
        "P": 75.0, "R": 81.8, "F1": 78.3,
        "TP": 9, "FP": 3, "FN": 2, "degenerate": False,
    }


def test_fixture_resolution_chain_match(fixture_run):
    corpus, records = fixture_run
    prf = ev.score_resolution(corpus, records)
    # d4's predicted antecedent is the pronoun "It", a chain mate of the
    # gold antecedent "a dog": correct under chain-match.
    assert (prf.tp, prf.fp, prf.fn) == (9, 3, 2)
    assert round1(prf.f1_score) == 78.3


def test_fixture_resolution_strict(fixture_run):
    corpus, records = fixture_run
    prf = ev.score_resolution(corpus, records, strict_antecedent=True)
    assert (prf.tp, prf.fp, prf.fn) == (8, 4, 3)
    assert round1(prf.f1_score) == 69.6


def test_fixture_subtype_downstream(fixture_run):
    corpus, records = fixture_run
    gold_sets, pred_sets = ev.paired_subtype_sets(corpus, records)
    # 11 gold instances + 1 extraneous predicted pair (A clock -> library).
    assert len(gold_sets) == 12
    scores = ev.score_subtypes(gold_sets, pred_sets)
    assert (scores["TP"], scores["FP"], scores["FN"]) == (10, 1, 2)
    assert scores["P"] == 90.9
    assert scores["R"] == 83.3
    assert scores["F1"] == 87.0
    assert scores["exact_accuracy"] == 75.0


def test_fixture_basic_accuracy():
    corpus = build_fixture_corpus()
    gw = Gateway(ScriptedMockBackend(build_mock_script()), BackendConfig())
    templates, fewshot = TemplateSet.default(), FewShotSet.empty()
    records = []
    for doc in corpus.documents:
        anaphors = [doc.mention(b.anaphor_id) for b in doc.gold_bridging]
        records.extend(
            run_basic(doc, anaphors, PipelineConfig(), gw, templates, fewshot)
        )
    acc = ev.score_basic_accuracy(corpus, records)
    assert acc == {"accuracy": 90.9, "correct": 10, "total": 11}
    strict = ev.score_basic_accuracy(corpus, records, strict_antecedent=True)
    assert strict == {"accuracy": 81.8, "correct": 9, "total": 11}


def test_fixture_basic_subtype_scores():
    corpus = build_fixture_corpus()
    gw = Gateway(ScriptedMockBackend(build_mock_script()), BackendConfig())
    templates, fewshot = TemplateSet.default(), FewShotSet.empty()
    records = []
    for doc in corpus.documents:
        pairs = [
            (doc.mention(b.anaphor_id), doc.mention(b.antecedent_id))
            for b in doc.gold_bridging
        ]
        records.extend(
            run_basic_subtype(doc, pairs, PipelineConfig(), gw, templates, fewshot)
        )
    gold_sets, pred_sets = ev.basic_subtype_sets(corpus, records)
    scores = ev.score_subtypes(gold_sets, pred_sets)
    assert (scores["TP"], scores["FP"], scores["FN"]) == (11, 1, 1)
    assert scores["F1"] == 91.7
    assert scores["exact_accuracy"] == 90.9


def test_spans_match_head_mode():
    assert ev.spans_match((3, 5), (3, 5))
    assert not ev.spans_match((3, 5), (4, 5))
    assert ev.spans_match((3, 5), (4, 5), head_match=True)  # shared end token
    assert not ev.spans_match((3, 5), (4, 6), head_match=True)
    assert not ev.spans_match(None, (4, 6), head_match=True)


def test_head_match_flag_relaxes_recognition():
    corpus = build_fixture_corpus()
    doc = corpus.documents[0]
    # Predict a span sharing m2's head token but not its start.
    shorter = PredictionRecord(
        doc_id=doc.doc_id,
        anaphor=PredictedSpan(text="door", start=6, end=6),
        antecedent=None,
    )
    strict = ev.score_recognition(corpus, [shorter])
    relaxed = ev.score_recognition(corpus, [shorter], head_match=True)
    assert strict.tp == 0
    assert relaxed.tp == 1


def test_duplicate_predictions_collapse():
    corpus = build_fixture_corpus()
    doc = corpus.documents[0]
    records = [record(doc.doc_id, doc, "m2", "m1")] * 3
    prf = ev.score_recognition(corpus, records)
    assert (prf.tp, prf.fp) == (1, 0)
    res = ev.score_resolution(corpus, records)
    assert (res.tp, res.fp) == (1, 0)


def test_unaligned_predictions_count_as_fp():
    corpus = build_fixture_corpus()
    raw = PredictionRecord(
        doc_id="fix_house",
        anaphor=PredictedSpan(text="never attested"),
        antecedent=None,
    )
    prf = ev.score_recognition(corpus, [raw])
    assert (prf.tp, prf.fp, prf.fn) == (0, 1, 11)


def test_unknown_doc_id_rejected():
    corpus = build_fixture_corpus()
    bad = PredictionRecord(
        doc_id="ghost", anaphor=PredictedSpan(text="x", start=0, end=0), antecedent=None
    )
    with pytest.raises(ev.ScoringError):
        ev.score_recognition(corpus, [bad])


def test_basic_accuracy_requires_gold():
    corpus = build_fixture_corpus()
    for doc in corpus.documents:
        doc.gold_bridging = ()
    with pytest.raises(ev.ScoringError):
        ev.score_basic_accuracy(corpus, [])


def test_score_subtypes_alignment_required():
    with pytest.raises(ev.ScoringError):
        ev.score_subtypes([set()], [])


def test_score_subtypes_hand_example():
    gold = [{"entity-meronomy"}, {"set-member", "set-subset"}, {"other"}]
    pred = [{"entity-meronomy"}, {"set-member"}, set()]
    scores = ev.score_subtypes(gold, pred)
    assert (scores["TP"], scores["FP"], scores["FN"]) == (2, 0, 2)
    assert scores["P"] == 100.0
    assert scores["R"] == 50.0
    assert scores["exact_accuracy"] == round1(100.0 / 3)


def test_perfect_predictions_score_100():
    corpus = build_fixture_corpus()
    records = []
    for doc in corpus.documents:
        for b in doc.gold_bridging:
            records.append(
                record(
                    doc.doc_id,
                    doc,
                    b.anaphor_id,
                    b.antecedent_id,
                    [s.value for s in b.subtypes],
                )
            )
    rec = ev.score_recognition(corpus, records)
    res = ev.score_resolution(corpus, records, strict_antecedent=True)
    assert rec.precision == rec.recall == 100.0
    assert res.precision == res.recall == 100.0
    gold_sets, pred_sets = ev.paired_subtype_sets(corpus, records)
    assert ev.score_subtypes(gold_sets, pred_sets)["F1"] == 100.0


def test_degenerate_flag():
    corpus = build_fixture_corpus()
    for doc in corpus.documents:
        doc.gold_bridging = ()
    prf = ev.score_recognition(corpus, [])
    assert prf.degenerate is True
    assert prf.precision == 0.0


def test_report_table_formatting(fixture_run):
    corpus, records = fixture_run
    report = ev.EvalReport(
        recognition=ev.score_recognition(corpus, records),
        resolution=ev.score_resolution(corpus, records),
    )
    table = report.format_table()
    assert "Recognition" in table and "Resolution" in table
    assert "78.3" in table
    assert "recognition" in report.to_dict()
