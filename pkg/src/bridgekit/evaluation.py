"""Scoring for anaphor recognition, resolution and subtype classification.

All rates use the percent convention (0..100). One-decimal reporting
rounds half away from zero. Antecedent correctness defaults to
chain-match: a predicted antecedent counts when its span equals the gold
antecedent span or it belongs to the same coreference chain; strict
span-only matching is available behind a flag.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import Corpus, Document, SubtypeLabel
from .numfmt import round1
from .pipeline import PredictionRecord


class ScoringError(ValueError):
    """Prediction/gold mismatch that prevents scoring."""


@dataclass
class PRF:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    degenerate: bool = False  # both gold and predictions empty

    @property
    def precision(self):
        total = self.tp + self.fp
        return 100.0 * self.tp / total if total else 0.0

    @property
    def recall(self):
        total = self.tp + self.fn
        return 100.0 * self.tp / total if total else 0.0

    @property
    def f1_score(self):
        return f1(self.precision, self.recall)

    def to_dict(self):
        return {
            "P": round1(self.precision),
            "R": round1(self.recall),
            "F1": round1(self.f1_score),
            "TP": self.tp,
            "FP": self.fp,
            "FN": self.fn,
            "degenerate": self.degenerate,
        }


@dataclass
class EvalReport:
    recognition: PRF | None = None
    resolution: PRF | None = None
    basic_accuracy: dict | None = None
    subtype: dict | None = None
    flags: dict = field(default_factory=dict)

    def to_dict(self):
        out = {"flags": self.flags}
        if self.recognition is not None:
            out["recognition"] = self.recognition.to_dict()
        if self.resolution is not None:
            out["resolution"] = self.resolution.to_dict()
        if self.basic_accuracy is not None:
            out["basic_accuracy"] = self.basic_accuracy
        if self.subtype is not None:
            out["subtype"] = self.subtype
        return out

    def format_table(self) -> str:
        lines = []
        if self.recognition is not None or self.resolution is not None:
            lines.append(f"{'':24}{'P':>8}{'R':>8}{'F':>8}")
            for name, prf in (
                ("Recognition", self.recognition),
                ("Resolution", self.resolution),
            ):
                if prf is None:
                    continue
                lines.append(
                    f"{name:<24}"
                    f"{round1(prf.precision):>8.1f}"
                    f"{round1(prf.recall):>8.1f}"
                    f"{round1(prf.f1_score):>8.1f}"
                )
        if self.basic_accuracy is not None:
            acc = self.basic_accuracy
            lines.append(
                f"{'Basic accuracy':<24}{acc['accuracy']:>8.1f}"
                f"   ({acc['correct']}/{acc['total']})"
            )
        if self.subtype is not None:
            st = self.subtype
            lines.append(
                f"{'Subtype labels':<24}"
                f"{st['P']:>8.1f}{st['R']:>8.1f}{st['F1']:>8.1f}"
            )
            lines.append(f"{'Subtype exact match':<24}{st['exact_accuracy']:>8.1f}")
        return "\n".join(lines)


def f1(p: float, r: float) -> float:
    """Harmonic mean of percent precision/recall; 0 when both are 0."""
    if p + r == 0:
        return 0.0
    return 2.0 * p * r / (p + r)


def _gold_anaphor_spans(doc: Document):
    return {doc.mention(b.anaphor_id).span for b in doc.gold_bridging}


def _predicted_anaphor_spans(records):
    spans = set()
    for r in records:
        if r.anaphor.span is not None:
            spans.add(r.anaphor.span)
    return spans


def _group_by_doc(corpus: Corpus, predictions):
    known = {doc.doc_id for doc in corpus.documents}
    by_doc: dict[str, list[PredictionRecord]] = {d: [] for d in known}
    for record in predictions:
        if record.doc_id not in known:
            raise ScoringError(
                f"prediction references unknown document {record.doc_id!r}"
            )
        by_doc[record.doc_id].append(record)
    return by_doc


def spans_match(a, b, head_match=False) -> bool:
    """Exact span equality; head-match mode also accepts a shared end token
    (right-headed NP approximation), for cross-system comparison only."""
    if a == b:
        return True
    return head_match and a is not None and b is not None and a[1] == b[1]


def score_recognition(corpus: Corpus, predictions, head_match=False) -> PRF:
    """Span-level P/R/F over predicted vs gold bridging anaphors.

    Duplicate predicted spans collapse before counting; unaligned
    predictions count as false positives.
    """
    by_doc = _group_by_doc(corpus, predictions)
    prf = PRF()
    any_gold = any_pred = False
    for doc in corpus.documents:
        records = by_doc[doc.doc_id]
        gold = sorted(_gold_anaphor_spans(doc))
        pred = sorted(_predicted_anaphor_spans(records))
        unaligned = sum(1 for r in records if r.anaphor.span is None)
        matched = set()
        tp = 0
        for p in pred:
            for g in gold:
                if g not in matched and spans_match(p, g, head_match):
                    matched.add(g)
                    tp += 1
                    break
        prf.tp += tp
        prf.fp += len(pred) - tp + unaligned
        prf.fn += len(gold) - tp
        any_gold = any_gold or bool(gold)
        any_pred = any_pred or bool(pred) or unaligned > 0
    prf.degenerate = not any_gold and not any_pred
    return prf


def _chain_spans(doc: Document, mention_id) -> set:
    """Spans of all mentions coreferent with the given mention (incl. itself)."""
    mention = doc.mention(mention_id)
    if mention.chain_id is None:
        return {mention.span}
    chain = doc.chain(mention.chain_id)
    return {doc.mention(mid).span for mid in chain.mention_ids}


def antecedent_matches(
    doc: Document, gold_antecedent_id, predicted, strict=False
) -> bool:
    """Antecedent correctness under chain-match (default) or strict mode."""
    if predicted is None or predicted.span is None:
        return gold_antecedent_id is None
    if gold_antecedent_id is None:
        return False
    gold_span = doc.mention(gold_antecedent_id).span
    if predicted.span == gold_span:
        return True
    if strict:
        return False
    return predicted.span in _chain_spans(doc, gold_antecedent_id)


def score_resolution(
    corpus: Corpus, predictions, strict_antecedent=False, head_match=False
) -> PRF:
    """Joint anaphor + antecedent P/R/F.

    A predicted pair is a true positive when its anaphor span matches a
    gold anaphor span and its antecedent is correct for that gold instance.
    """
    by_doc = _group_by_doc(corpus, predictions)
    prf = PRF()
    any_gold = any_pred = False
    for doc in corpus.documents:
        records = by_doc[doc.doc_id]
        gold = list(doc.gold_bridging)
        # Dedupe predicted pairs by (anaphor span, antecedent span).
        seen = set()
        pairs = []
        for r in records:
            key = (
                r.anaphor.span,
                r.antecedent.span if r.antecedent else None,
                r.anaphor.text if r.anaphor.span is None else None,
            )
            if key not in seen:
                seen.add(key)
                pairs.append(r)
        matched_gold = set()
        tp = 0
        for r in pairs:
            ok = False
            if r.anaphor.span is not None:
                for b in gold:
                    if id(b) in matched_gold:
                        continue
                    if not spans_match(
                        r.anaphor.span, doc.mention(b.anaphor_id).span, head_match
                    ):
                        continue
                    if antecedent_matches(
                        doc, b.antecedent_id, r.antecedent, strict=strict_antecedent
                    ):
                        matched_gold.add(id(b))
                        ok = True
                        break
            if ok:
                tp += 1
        n_gold = len(gold)
        prf.tp += tp
        prf.fp += len(pairs) - tp
        prf.fn += n_gold - tp
        any_gold = any_gold or n_gold > 0
        any_pred = any_pred or bool(pairs)
    prf.degenerate = not any_gold and not any_pred
    return prf


def score_basic_accuracy(corpus: Corpus, predictions, strict_antecedent=False) -> dict:
    """Correct antecedents / total gold anaphors, for basic-setting runs.

    "No antecedent" predictions count as incorrect (every gold instance in
    the basic run has an antecedent by construction).
    """
    by_doc = _group_by_doc(corpus, predictions)
    correct = 0
    total = 0
    for doc in corpus.documents:
        pred_by_span = {}
        for r in by_doc[doc.doc_id]:
            if r.anaphor.span is not None:
                pred_by_span.setdefault(r.anaphor.span, r)
        for b in doc.gold_bridging:
            total += 1
            record = pred_by_span.get(doc.mention(b.anaphor_id).span)
            if record is None or record.antecedent is None:
                continue
            if antecedent_matches(
                doc, b.antecedent_id, record.antecedent, strict=strict_antecedent
            ):
                correct += 1
    if total == 0:
        raise ScoringError("basic accuracy undefined: no gold bridging anaphora")
    return {
        "accuracy": round1(100.0 * correct / total),
        "correct": correct,
        "total": total,
    }


def score_subtypes(gold_sets, pred_sets) -> dict:
    """Micro label P/R/F over (instance, label) assignments + exact match."""
    if len(gold_sets) != len(pred_sets):
        raise ScoringError(
            f"aligned instance lists required: {len(gold_sets)} gold vs "
            f"{len(pred_sets)} predicted"
        )
    prf = PRF()
    exact = 0
    for gold, pred in zip(gold_sets, pred_sets):
        gold = frozenset(gold)
        pred = frozenset(pred)
        prf.tp += len(gold & pred)
        prf.fp += len(pred - gold)
        prf.fn += len(gold - pred)
        if gold == pred:
            exact += 1
    n = len(gold_sets)
    return {
        "P": round1(prf.precision),
        "R": round1(prf.recall),
        "F1": round1(prf.f1_score),
        "exact_accuracy": round1(100.0 * exact / n) if n else 0.0,
        "TP": prf.tp,
        "FP": prf.fp,
        "FN": prf.fn,
        "instances": n,
    }


def paired_subtype_sets(corpus: Corpus, predictions, strict_antecedent=False):
    """Gold/predicted subtype sets for downstream (end-to-end) scoring.

    Only gold instances whose pair was predicted contribute a predicted
    set; missed gold pairs contribute their labels as misses (empty
    predicted set). Extraneous predicted pairs contribute their labels
    against an empty gold set.
    """
    by_doc = _group_by_doc(corpus, predictions)
    gold_sets, pred_sets = [], []
    for doc in corpus.documents:
        records = by_doc[doc.doc_id]
        used = set()
        for b in doc.gold_bridging:
            gold_span = doc.mention(b.anaphor_id).span
            match = None
            for i, r in enumerate(records):
                if i in used or r.anaphor.span != gold_span:
                    continue
                if antecedent_matches(
                    doc, b.antecedent_id, r.antecedent, strict=strict_antecedent
                ):
                    match = i
                    break
            gold_sets.append(set(b.subtypes))
            if match is not None:
                used.add(match)
                pred_sets.append(set(records[match].subtypes))
            else:
                pred_sets.append(set())
        for i, r in enumerate(records):
            if i not in used and r.subtypes:
                gold_sets.append(set())
                pred_sets.append(set(r.subtypes))
    return gold_sets, pred_sets


def basic_subtype_sets(corpus: Corpus, predictions):
    """Aligned gold/predicted subtype sets for a basic-subtype run."""
    by_doc = _group_by_doc(corpus, predictions)
    gold_sets, pred_sets = [], []
    for doc in corpus.documents:
        pred_by_pair = {}
        for r in by_doc[doc.doc_id]:
            ant = r.antecedent.span if r.antecedent else None
            pred_by_pair[(r.anaphor.span, ant)] = r
        for b in doc.gold_bridging:
            if b.antecedent_id is None:
                continue
            pair = (
                doc.mention(b.anaphor_id).span,
                doc.mention(b.antecedent_id).span,
            )
            record = pred_by_pair.get(pair)
            gold_sets.append(set(b.subtypes))
            pred_sets.append(set(record.subtypes) if record else set())
    return gold_sets, pred_sets
