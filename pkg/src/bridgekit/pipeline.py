"""Orchestration of the three subtasks into the evaluation settings.

End-to-end: per-sentence recognition queries plus candidate-confirmation
queries, span alignment, coreference filtering, then resolution and
(optionally) subtype queries. Basic: resolution per gold anaphor. Basic
subtype: one classification query per gold pair.

Queries run concurrently up to a configured limit; results are assembled
in deterministic document order regardless of completion order.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .corpus import Document, Mention, SubtypeLabel
from .gateway import Gateway, ResponseParseError, parse_recognition, parse_resolution, parse_subtypes
from .heuristics import CandidateKeywordList, align_to_mention, filter_coref, suggest_candidates
from .prompts import (
    FewShotSet,
    TemplateSet,
    render_candidate_confirmation,
    render_recognition,
    render_resolution,
    render_subtype,
)
from .windows import (
    WindowConfig,
    recognition_window,
    resolution_window,
    subtype_window_basic,
    subtype_window_end_to_end,
)

logger = logging.getLogger(__name__)

PROVENANCE_BASE = "base_query"
PROVENANCE_CANDIDATE = "candidate_confirmation"


@dataclass(frozen=True)
class PredictedSpan:
    """A predicted anaphor or antecedent; aligned spans reference mentions."""

    text: str
    start: int | None = None
    end: int | None = None
    mention_id: str | None = None
    aligned: bool = False

    @classmethod
    def from_mention(cls, doc: Document, mention: Mention):
        return cls(
            text=doc.mention_text(mention),
            start=mention.start,
            end=mention.end,
            mention_id=mention.id,
            aligned=True,
        )

    @property
    def span(self):
        if self.start is None:
            return None
        return (self.start, self.end)


@dataclass
class PredictionRecord:
    doc_id: str
    anaphor: PredictedSpan
    antecedent: PredictedSpan | None
    subtypes: frozenset[SubtypeLabel] = frozenset()
    provenance: tuple[str, ...] = (PROVENANCE_BASE,)
    query_keys: tuple[str, ...] = ()

    def to_dict(self):
        def span_dict(s: PredictedSpan):
            d = {"text": s.text}
            if s.aligned:
                d.update({"id": s.mention_id, "start": s.start, "end": s.end})
            else:
                d["unaligned"] = True
            return d

        return {
            "doc_id": self.doc_id,
            "anaphor": span_dict(self.anaphor),
            "antecedent": span_dict(self.antecedent) if self.antecedent else None,
            "subtypes": sorted(s.value for s in self.subtypes),
            "provenance": list(self.provenance),
        }

    @classmethod
    def from_dict(cls, obj):
        def span(d):
            if d is None:
                return None
            return PredictedSpan(
                text=d.get("text", ""),
                start=d.get("start"),
                end=d.get("end"),
                mention_id=d.get("id"),
                aligned=not d.get("unaligned", False),
            )

        return cls(
            doc_id=obj["doc_id"],
            anaphor=span(obj["anaphor"]),
            antecedent=span(obj.get("antecedent")),
            subtypes=frozenset(SubtypeLabel(s) for s in obj.get("subtypes", [])),
            provenance=tuple(obj.get("provenance", [PROVENANCE_BASE])),
        )


@dataclass(frozen=True)
class PipelineConfig:
    windows: WindowConfig = WindowConfig()
    align_spans: bool = True
    suggest_candidates: bool = True
    coref_filter: bool = True
    classify_subtypes: bool = True
    keywords: CandidateKeywordList = CandidateKeywordList()
    parallelism: int = 1

    def __post_init__(self):
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


def _complete_many(gateway: Gateway, prompts, parallelism):
    """Issue queries concurrently; results come back in input order."""
    if parallelism <= 1 or len(prompts) <= 1:
        return [gateway.complete(p) for p in prompts]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(gateway.complete, prompts))


def _parse_recognition_safe(record):
    try:
        return parse_recognition(record.raw_response)
    except ResponseParseError as exc:
        # Treated as "no anaphora in this sentence": recall loss, not crash.
        logger.warning("recognition parse failure (%s); treating as []", exc)
        return []


def _align_anaphor(doc, cfg: PipelineConfig, text, sentence_index):
    s_lo, s_hi = doc.sentence_span(sentence_index)
    region = (
        max(0, s_lo - cfg.windows.recognition_buffer_tokens),
        min(len(doc.tokens) - 1, s_hi + cfg.windows.recognition_buffer_tokens),
    )
    return align_to_mention(doc, text, region, doc.mentions, reference=s_lo)


def _exact_span(doc, text, region):
    """Exact-span fallback used when alignment is disabled."""
    from .heuristics import _occurrences

    spans = _occurrences(doc, text, region)
    for span in spans:
        for m in doc.mentions:
            if m.span == span:
                return m
    return None


def run_end_to_end(
    doc: Document,
    cfg: PipelineConfig,
    gateway: Gateway,
    templates: TemplateSet,
    fewshot: FewShotSet,
) -> list[PredictionRecord]:
    """Full pipeline over one document: recognize, resolve, classify."""
    # Stage 1: one recognition query per sentence.
    rec_windows = [
        recognition_window(doc, s, cfg.windows) for s in range(doc.n_sentences)
    ]
    rec_prompts = [
        render_recognition(templates, w, fewshot) for w in rec_windows
    ]
    rec_records = _complete_many(gateway, rec_prompts, cfg.parallelism)

    # (sentence_index, anaphor) accumulator keyed by span for deduping.
    found: dict[tuple, dict] = {}

    def add(span_key, sentence_index, mention, raw_text, provenance, qkey):
        entry = found.setdefault(
            span_key,
            {
                "sentence": sentence_index,
                "mention": mention,
                "text": raw_text,
                "provenance": [],
                "keys": [],
            },
        )
        if provenance not in entry["provenance"]:
            entry["provenance"].append(provenance)
        entry["keys"].append(qkey)

    for sentence_index, record in enumerate(rec_records):
        for predicted in _parse_recognition_safe(record):
            if cfg.align_spans:
                mention = _align_anaphor(doc, cfg, predicted, sentence_index)
                if mention is None:
                    logger.debug(
                        "rejected unalignable anaphor %r in %s sentence %d",
                        predicted,
                        doc.doc_id,
                        sentence_index,
                    )
                    continue
                # Buffer-token predictions attribute to the sentence owning
                # the span start.
                owner = doc.tokens[mention.start].sentence_index
                add(
                    mention.span, owner, mention, predicted,
                    PROVENANCE_BASE, record.cache_key,
                )
            else:
                s_lo, s_hi = doc.sentence_span(sentence_index)
                mention = _exact_span(doc, predicted, (s_lo, s_hi))
                if mention is not None:
                    add(
                        mention.span, sentence_index, mention, predicted,
                        PROVENANCE_BASE, record.cache_key,
                    )
                else:
                    add(
                        ("raw", sentence_index, predicted), sentence_index,
                        None, predicted, PROVENANCE_BASE, record.cache_key,
                    )

    # Stage 2: candidate-confirmation queries for heuristic suggestions.
    if cfg.suggest_candidates:
        candidates = []
        for sentence_index in range(doc.n_sentences):
            for mention in suggest_candidates(
                doc, sentence_index, doc.mentions, cfg.keywords
            ):
                if mention.span not in found:
                    candidates.append((sentence_index, mention))
        cand_prompts = [
            render_candidate_confirmation(
                templates,
                recognition_window(doc, s, cfg.windows),
                doc.mention_text(m),
                fewshot,
            )
            for s, m in candidates
        ]
        cand_records = _complete_many(gateway, cand_prompts, cfg.parallelism)
        for (sentence_index, mention), record in zip(candidates, cand_records):
            confirmed = [
                t.lower() for t in _parse_recognition_safe(record)
            ]
            if doc.mention_text(mention).lower() in confirmed:
                add(
                    mention.span, sentence_index, mention,
                    doc.mention_text(mention), PROVENANCE_CANDIDATE,
                    record.cache_key,
                )

    # Stage 3: coreference filter over aligned predictions.
    ordered_keys = sorted(
        found,
        key=lambda k: (
            (k[0], k[1]) if found[k]["mention"] else (len(doc.tokens), k[1])
        ),
    )
    if cfg.coref_filter:
        aligned = [found[k]["mention"] for k in ordered_keys if found[k]["mention"]]
        kept, removed = filter_coref(aligned, doc)
        removed_spans = {m.span for m in removed}
        ordered_keys = [
            k
            for k in ordered_keys
            if not (found[k]["mention"] and found[k]["mention"].span in removed_spans)
        ]

    # Stage 4: one resolution query per surviving anaphor.
    resolvable = [k for k in ordered_keys if found[k]["mention"] is not None]
    res_prompts = [
        render_resolution(
            templates,
            resolution_window(doc, found[k]["mention"], cfg.windows),
            fewshot,
        )
        for k in resolvable
    ]
    res_records = _complete_many(gateway, res_prompts, cfg.parallelism)

    records: list[PredictionRecord] = []
    for key, res_record in zip(resolvable, res_records):
        entry = found[key]
        anaphor = entry["mention"]
        try:
            answer = parse_resolution(res_record.raw_response)
        except ResponseParseError as exc:
            logger.warning("resolution parse failure (%s); using no antecedent", exc)
            answer = None
        antecedent = None
        if answer is not None:
            antecedent = _align_antecedent(doc, cfg, answer, anaphor)
            if antecedent is None and not cfg.align_spans:
                records.append(
                    PredictionRecord(
                        doc_id=doc.doc_id,
                        anaphor=PredictedSpan.from_mention(doc, anaphor),
                        antecedent=PredictedSpan(text=answer),
                        provenance=tuple(entry["provenance"]),
                        query_keys=tuple(entry["keys"] + [res_record.cache_key]),
                    )
                )
                continue
        records.append(
            PredictionRecord(
                doc_id=doc.doc_id,
                anaphor=PredictedSpan.from_mention(doc, anaphor),
                antecedent=(
                    PredictedSpan.from_mention(doc, antecedent)
                    if antecedent is not None
                    else None
                ),
                provenance=tuple(entry["provenance"]),
                query_keys=tuple(entry["keys"] + [res_record.cache_key]),
            )
        )
    # Unaligned raw predictions (alignment disabled) are carried through
    # flagged, without resolution queries over unknown spans.
    for key in ordered_keys:
        if found[key]["mention"] is None:
            entry = found[key]
            records.append(
                PredictionRecord(
                    doc_id=doc.doc_id,
                    anaphor=PredictedSpan(text=entry["text"]),
                    antecedent=None,
                    provenance=tuple(entry["provenance"]),
                    query_keys=tuple(entry["keys"]),
                )
            )

    # Stage 5: subtype classification for pairs with an antecedent.
    if cfg.classify_subtypes:
        pairs = [
            r
            for r in records
            if r.antecedent is not None and r.antecedent.aligned and r.anaphor.aligned
        ]
        sub_prompts = [
            render_subtype(
                templates,
                subtype_window_end_to_end(
                    doc,
                    doc.mention(r.anaphor.mention_id),
                    doc.mention(r.antecedent.mention_id),
                    cfg.windows,
                ),
                fewshot,
            )
            for r in pairs
        ]
        sub_records = _complete_many(gateway, sub_prompts, cfg.parallelism)
        for record, sub_record in zip(pairs, sub_records):
            record.subtypes = _parse_subtypes_safe(sub_record)
            record.query_keys = record.query_keys + (sub_record.cache_key,)

    records.sort(key=_record_order)
    return records


def _parse_subtypes_safe(query_record):
    try:
        parsed = parse_subtypes(query_record.raw_response)
    except ResponseParseError as exc:
        logger.warning("subtype parse failure (%s); using empty set", exc)
        return frozenset()
    if parsed.unknown:
        logger.warning("unknown subtype labels ignored: %r", parsed.unknown)
    return parsed.labels


def _align_antecedent(doc, cfg: PipelineConfig, answer, anaphor: Mention):
    if not cfg.align_spans:
        region = (0, anaphor.start - 1)
        return _exact_span(doc, answer, region) if anaphor.start > 0 else None
    if anaphor.start == 0:
        return None
    region = (0, anaphor.start - 1)
    preceding = [m for m in doc.mentions if m.end < anaphor.start]
    return align_to_mention(
        doc, answer, region, preceding, reference=anaphor.start
    )


def _record_order(record: PredictionRecord):
    span = record.anaphor.span
    if span is None:
        return (1, 10**9, 10**9, record.anaphor.text)
    return (0, span[0], span[1], record.anaphor.text)


def run_basic(
    doc: Document,
    gold_anaphors,
    cfg: PipelineConfig,
    gateway: Gateway,
    templates: TemplateSet,
    fewshot: FewShotSet,
) -> list[PredictionRecord]:
    """Resolution only, one query per gold anaphor; recognition is skipped."""
    prompts = [
        render_resolution(
            templates, resolution_window(doc, anaphor, cfg.windows), fewshot
        )
        for anaphor in gold_anaphors
    ]
    responses = _complete_many(gateway, prompts, cfg.parallelism)
    records = []
    for anaphor, response in zip(gold_anaphors, responses):
        try:
            answer = parse_resolution(response.raw_response)
        except ResponseParseError as exc:
            logger.warning("resolution parse failure (%s); using no antecedent", exc)
            answer = None
        antecedent = None
        if answer is not None:
            antecedent = _align_antecedent(doc, cfg, answer, anaphor)
        records.append(
            PredictionRecord(
                doc_id=doc.doc_id,
                anaphor=PredictedSpan.from_mention(doc, anaphor),
                antecedent=(
                    PredictedSpan.from_mention(doc, antecedent)
                    if antecedent is not None
                    else (
                        PredictedSpan(text=answer)
                        if answer is not None and not cfg.align_spans
                        else None
                    )
                ),
                query_keys=(response.cache_key,),
            )
        )
    return records


def run_basic_subtype(
    doc: Document,
    gold_pairs,
    cfg: PipelineConfig,
    gateway: Gateway,
    templates: TemplateSet,
    fewshot: FewShotSet,
) -> list[PredictionRecord]:
    """One subtype query per gold (anaphor, antecedent) pair, basic windows."""
    prompts = [
        render_subtype(
            templates,
            subtype_window_basic(doc, anaphor, antecedent, cfg.windows),
            fewshot,
        )
        for anaphor, antecedent in gold_pairs
    ]
    responses = _complete_many(gateway, prompts, cfg.parallelism)
    records = []
    for (anaphor, antecedent), response in zip(gold_pairs, responses):
        records.append(
            PredictionRecord(
                doc_id=doc.doc_id,
                anaphor=PredictedSpan.from_mention(doc, anaphor),
                antecedent=PredictedSpan.from_mention(doc, antecedent),
                subtypes=_parse_subtypes_safe(response),
                query_keys=(response.cache_key,),
            )
        )
    return records


def write_predictions(records, path):
    """Line-delimited prediction dump, stable field order."""
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record.to_dict(), ensure_ascii=False, separators=(",", ":")))
            f.write("\n")


def read_predictions(path) -> list[PredictionRecord]:
    records = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(PredictionRecord.from_dict(json.loads(line)))
    return records
