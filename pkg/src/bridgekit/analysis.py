"""Outcome-classified distance distributions and the associated statistics.

Covers: anaphor-antecedent token distances grouped by recognition outcome
(TP/FP/FN) with a 150-token long-distance filter, two-sample
Kolmogorov-Smirnov tests with Holm step-down adjustment, chi-square
association with Pearson residuals, and the subtype confusion matrix with
a "none" row/column for missing and extraneous labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import special, stats

from .corpus import Corpus, Document, Mention, SUBTYPE_LABELS
from .evaluation import ScoringError, _group_by_doc, antecedent_matches

LONG_DISTANCE_CUTOFF = 150

NONE_LABEL = "none"

CONFUSION_LABELS = SUBTYPE_LABELS + [NONE_LABEL]


class OutcomeClass(str, Enum):
    TP = "TP"
    FP = "FP"
    FN = "FN"


@dataclass(frozen=True)
class KSResult:
    statistic: float  # sup ECDF gap in [0, 1]
    p_value: float
    n_a: int
    n_b: int
    adjusted_p: float | None = None


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    df: int
    p_value: float
    expected: np.ndarray
    residuals: np.ndarray  # Pearson residuals per cell
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]


def pair_distance(doc: Document, anaphor: Mention, antecedent: Mention) -> int:
    """Token gap between antecedent end and anaphor start."""
    if antecedent.end >= anaphor.start:
        raise ValueError(
            f"antecedent {antecedent.span} does not precede anaphor "
            f"{anaphor.span}"
        )
    return anaphor.start - antecedent.end


@dataclass
class OutcomeDistances:
    """Per-class distance samples plus outcome counts.

    Distances over the long-distance cutoff are excluded from the samples
    but still counted in the outcome totals.
    """

    distances: dict = field(default_factory=lambda: {c: [] for c in OutcomeClass})
    counts: dict = field(default_factory=lambda: {c: 0 for c in OutcomeClass})
    excluded_long_distance: int = 0


def classify_outcomes(
    corpus: Corpus, predictions, cutoff=LONG_DISTANCE_CUTOFF
) -> OutcomeDistances:
    """Recognition outcome per gold/predicted anaphor, with distances.

    Gold anaphors whose span was predicted are TP, unmatched gold are FN;
    predicted spans with no gold match are FP. TP/FN distances use the
    gold antecedent; FP distances use the predicted antecedent when one
    exists.
    """
    by_doc = _group_by_doc(corpus, predictions)
    out = OutcomeDistances()
    for doc in corpus.documents:
        records = by_doc[doc.doc_id]
        pred_spans = {}
        for r in records:
            if r.anaphor.span is not None and r.anaphor.span not in pred_spans:
                pred_spans[r.anaphor.span] = r
        gold_spans = set()
        for b in doc.gold_bridging:
            anaphor = doc.mention(b.anaphor_id)
            gold_spans.add(anaphor.span)
            outcome = (
                OutcomeClass.TP if anaphor.span in pred_spans else OutcomeClass.FN
            )
            out.counts[outcome] += 1
            if b.antecedent_id is not None:
                distance = pair_distance(doc, anaphor, doc.mention(b.antecedent_id))
                if distance > cutoff:
                    out.excluded_long_distance += 1
                else:
                    out.distances[outcome].append(distance)
        for span, record in pred_spans.items():
            if span in gold_spans:
                continue
            out.counts[OutcomeClass.FP] += 1
            if record.antecedent is not None and record.antecedent.span is not None:
                ant_span = record.antecedent.span
                if ant_span[1] < span[0]:
                    distance = span[0] - ant_span[1]
                    if distance > cutoff:
                        out.excluded_long_distance += 1
                    else:
                        out.distances[OutcomeClass.FP].append(distance)
    return out


def ks_two_sample(a, b) -> KSResult:
    """Two-sample KS statistic with the asymptotic two-sided p-value.

    D is the supremum ECDF gap over the pooled sample points.
    """
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b, pooled, side="right") / b.size
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    en = math.sqrt(a.size * b.size / (a.size + b.size))
    p = float(special.kolmogorov(en * d))
    return KSResult(statistic=d, p_value=min(1.0, p), n_a=int(a.size), n_b=int(b.size))


def ks_two_sample_exact(a, b) -> KSResult:
    """Small-sample variant using the exact two-sided distribution."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    result = stats.ks_2samp(a, b, method="exact")
    return KSResult(
        statistic=float(result.statistic),
        p_value=float(result.pvalue),
        n_a=int(a.size),
        n_b=int(b.size),
    )


def holm_adjust(p_values) -> list[float]:
    """Holm step-down adjustment; output aligns with the input order."""
    p_values = list(p_values)
    for p in p_values:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p-value {p} outside [0, 1]")
    m = len(p_values)
    order = sorted(range(m), key=lambda i: p_values[i])
    adjusted = [0.0] * m
    running_max = 0.0
    for rank, idx in enumerate(order):
        value = min(1.0, (m - rank) * p_values[idx])
        running_max = max(running_max, value)
        adjusted[idx] = running_max
    return adjusted


def chi_square_association(table, row_labels, col_labels) -> ChiSquareResult:
    """Pearson chi-square of independence with per-cell residuals."""
    observed = np.asarray(table, dtype=float)
    if observed.ndim != 2:
        raise ValueError("table must be two-dimensional")
    if np.any(observed < 0):
        raise ValueError("counts must be non-negative")
    row_sums = observed.sum(axis=1)
    col_sums = observed.sum(axis=0)
    total = observed.sum()
    if np.any(row_sums == 0) or np.any(col_sums == 0):
        raise ValueError("zero marginal row or column")
    expected = np.outer(row_sums, col_sums) / total
    residuals = (observed - expected) / np.sqrt(expected)
    statistic = float((residuals**2).sum())
    df = (observed.shape[0] - 1) * (observed.shape[1] - 1)
    p = float(stats.chi2.sf(statistic, df)) if df > 0 else 1.0
    return ChiSquareResult(
        statistic=statistic,
        df=df,
        p_value=p,
        expected=expected,
        residuals=residuals,
        row_labels=tuple(row_labels),
        col_labels=tuple(col_labels),
    )


def outcome_subtype_table(corpus: Corpus, predictions):
    """2 x 11 TP/FN-by-gold-subtype count table for the association test.

    Multi-label gold instances contribute one count per label.
    """
    by_doc = _group_by_doc(corpus, predictions)
    table = np.zeros((2, len(SUBTYPE_LABELS)), dtype=float)
    col = {label: i for i, label in enumerate(SUBTYPE_LABELS)}
    for doc in corpus.documents:
        pred_spans = {
            r.anaphor.span for r in by_doc[doc.doc_id] if r.anaphor.span is not None
        }
        for b in doc.gold_bridging:
            row = 0 if doc.mention(b.anaphor_id).span in pred_spans else 1
            for label in b.subtypes:
                table[row, col[label.value]] += 1
    return table, ("TP", "FN"), tuple(SUBTYPE_LABELS)


def subtype_confusion(gold_sets, pred_sets) -> np.ndarray:
    """Confusion counts over the 11 labels plus a "none" row/column.

    Rows are gold labels, columns predicted labels. Per instance: labels in
    both sets increment the diagonal; predicted-not-gold labels increment
    the ("none" gold, label) cell; gold-not-predicted labels increment the
    (label, "none") cell.
    """
    if len(gold_sets) != len(pred_sets):
        raise ScoringError(
            f"aligned instance lists required: {len(gold_sets)} vs {len(pred_sets)}"
        )
    n = len(CONFUSION_LABELS)
    index = {label: i for i, label in enumerate(CONFUSION_LABELS)}
    matrix = np.zeros((n, n), dtype=int)
    none_i = index[NONE_LABEL]
    for gold, pred in zip(gold_sets, pred_sets):
        gold = {getattr(g, "value", g) for g in gold}
        pred = {getattr(p, "value", p) for p in pred}
        for label in gold & pred:
            matrix[index[label], index[label]] += 1
        for label in pred - gold:
            matrix[none_i, index[label]] += 1
        for label in gold - pred:
            matrix[index[label], none_i] += 1
    return matrix


@dataclass
class AnalysisReport:
    outcome_distances: OutcomeDistances
    ks_results: dict = field(default_factory=dict)  # name -> KSResult | "skipped: ..."
    chi_square: ChiSquareResult | str | None = None
    confusion: np.ndarray | None = None

    def to_dict(self):
        def ks_dict(value):
            if isinstance(value, str):
                return value
            return {
                "D": value.statistic,
                "p_value": value.p_value,
                "adjusted_p": value.adjusted_p,
                "n_a": value.n_a,
                "n_b": value.n_b,
            }

        out = {
            "outcome_counts": {
                c.value: self.outcome_distances.counts[c] for c in OutcomeClass
            },
            "excluded_long_distance": self.outcome_distances.excluded_long_distance,
            "distances": {
                c.value: list(self.outcome_distances.distances[c])
                for c in OutcomeClass
            },
            "log_distances": {
                c.value: [math.log(d) for d in self.outcome_distances.distances[c]]
                for c in OutcomeClass
            },
            "ks": {name: ks_dict(v) for name, v in self.ks_results.items()},
        }
        if isinstance(self.chi_square, str) or self.chi_square is None:
            out["chi_square"] = self.chi_square
        else:
            cs = self.chi_square
            out["chi_square"] = {
                "statistic": cs.statistic,
                "df": cs.df,
                "p_value": cs.p_value,
                "row_labels": list(cs.row_labels),
                "col_labels": list(cs.col_labels),
                "residuals": cs.residuals.tolist(),
            }
        if self.confusion is not None:
            out["confusion"] = {
                "labels": CONFUSION_LABELS,
                "matrix": self.confusion.tolist(),
            }
        return out


def analyze(
    corpus: Corpus,
    predictions,
    min_sample=2,
    cutoff=LONG_DISTANCE_CUTOFF,
    exact_ks=False,
) -> AnalysisReport:
    """Full error analysis; statistics with too little data are skipped."""
    outcomes = classify_outcomes(corpus, predictions, cutoff=cutoff)
    report = AnalysisReport(outcome_distances=outcomes)

    ks_fn = ks_two_sample_exact if exact_ks else ks_two_sample
    comparisons = [
        ("FN_vs_TP", OutcomeClass.FN, OutcomeClass.TP),
        ("FN_vs_FP", OutcomeClass.FN, OutcomeClass.FP),
    ]
    computed = []
    for name, a_class, b_class in comparisons:
        a = outcomes.distances[a_class]
        b = outcomes.distances[b_class]
        if len(a) < min_sample or len(b) < min_sample:
            report.ks_results[name] = (
                f"skipped: n too small ({len(a)} vs {len(b)})"
            )
            continue
        report.ks_results[name] = ks_fn(a, b)
        computed.append(name)
    if computed:
        adjusted = holm_adjust(
            [report.ks_results[name].p_value for name in computed]
        )
        for name, adj in zip(computed, adjusted):
            result = report.ks_results[name]
            report.ks_results[name] = KSResult(
                statistic=result.statistic,
                p_value=result.p_value,
                n_a=result.n_a,
                n_b=result.n_b,
                adjusted_p=adj,
            )

    has_subtypes = any(
        b.subtypes for doc in corpus.documents for b in doc.gold_bridging
    )
    if has_subtypes:
        table, rows, cols = outcome_subtype_table(corpus, predictions)
        keep = table.sum(axis=0) > 0  # drop unattested subtype columns
        if table.sum() == 0 or np.all(table.sum(axis=1) == 0) or keep.sum() < 2:
            report.chi_square = "skipped: n too small"
        else:
            try:
                report.chi_square = chi_square_association(
                    table[:, keep],
                    rows,
                    tuple(c for c, k in zip(cols, keep) if k),
                )
            except ValueError as exc:
                report.chi_square = f"skipped: {exc}"
        from .evaluation import paired_subtype_sets

        gold_sets, pred_sets = paired_subtype_sets(corpus, predictions)
        report.confusion = subtype_confusion(gold_sets, pred_sets)
    return report
