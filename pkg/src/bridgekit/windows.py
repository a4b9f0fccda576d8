"""Deterministic context-window construction and span marker handling.

All window arithmetic is in corpus tokens (not backend subword tokens).
Back context is taken from the start of the buffered target region
backwards, so buffer and context never overlap.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .corpus import Document, Mention

logger = logging.getLogger(__name__)

ANAPHOR_OPEN = "{{"
ANAPHOR_CLOSE = "}}"
ANTECEDENT_MARK = "*"

_MARKER_TOKENS = {ANAPHOR_OPEN, ANAPHOR_CLOSE, ANTECEDENT_MARK}


class MarkerError(ValueError):
    """Raised when spans cannot be marked unambiguously."""


@dataclass(frozen=True)
class WindowConfig:
    back_context_tokens: int = 150
    recognition_buffer_tokens: int = 5
    basic_subtype_buffer_tokens: int = 10

    def __post_init__(self):
        for name in (
            "back_context_tokens",
            "recognition_buffer_tokens",
            "basic_subtype_buffer_tokens",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class Window:
    """A rendered excerpt: optional back context plus the target text."""

    context_text: str
    target_text: str
    target_span: tuple[int, int]  # inclusive token range of the target region
    context_span: tuple[int, int] | None = None


def recognition_window(doc: Document, sentence_index, cfg: WindowConfig) -> Window:
    """Sentence plus up to N buffer tokens each side, with back context.

    The target is the sentence extended by up to ``recognition_buffer_tokens``
    on each side (clipped at document bounds); the context is up to
    ``back_context_tokens`` tokens preceding the buffered target.
    """
    first, last = doc.sentence_span(sentence_index)
    lo = max(0, first - cfg.recognition_buffer_tokens)
    hi = min(len(doc.tokens) - 1, last + cfg.recognition_buffer_tokens)
    ctx_lo = max(0, lo - cfg.back_context_tokens)
    context_span = (ctx_lo, lo - 1) if lo > ctx_lo else None
    return Window(
        context_text=doc.token_text(ctx_lo, lo - 1) if context_span else "",
        target_text=doc.token_text(lo, hi),
        target_span=(lo, hi),
        context_span=context_span,
    )


def _marked_text(doc, lo, hi, spans):
    """Join tokens lo..hi with markers inserted as standalone tokens.

    spans: list of ((start, end), open_marker, close_marker); spans must be
    disjoint within the region.
    """
    ordered = sorted(spans, key=lambda s: s[0])
    for earlier, later in zip(ordered, ordered[1:]):
        if later[0][0] <= earlier[0][1]:  # overlap
            raise MarkerError(
                f"cannot mark overlapping spans {earlier[0]} and {later[0]}"
            )
    pieces = []
    opens = {span[0]: (open_m,) for span, open_m, _ in spans}
    closes = {span[1]: (close_m,) for span, _, close_m in spans}
    for i in range(lo, hi + 1):
        if i in opens:
            pieces.extend(opens[i])
        pieces.append(doc.tokens[i].text)
        if i in closes:
            pieces.extend(closes[i])
    return " ".join(pieces)


def strip_markers(text: str) -> str:
    """Remove standalone marker tokens; inverse of marker insertion."""
    return " ".join(tok for tok in text.split(" ") if tok not in _MARKER_TOKENS)


def _enclosing_sentence_range(doc: Document, mention: Mention):
    """Token range of the sentence(s) containing a mention span.

    A span crossing a sentence boundary renders over the enclosing range
    with a warning.
    """
    s_first = doc.tokens[mention.start].sentence_index
    s_last = doc.tokens[mention.end].sentence_index
    if s_first != s_last:
        logger.warning(
            "document %s: span [%d, %d] crosses sentence boundary; rendering "
            "over sentences %d..%d",
            doc.doc_id,
            mention.start,
            mention.end,
            s_first,
            s_last,
        )
    lo = doc.sentence_span(s_first)[0]
    hi = doc.sentence_span(s_last)[1]
    return lo, hi


def resolution_window(doc: Document, anaphor: Mention, cfg: WindowConfig) -> Window:
    """Anaphor's sentence with the anaphor in {{ }} plus left context."""
    lo, hi = _enclosing_sentence_range(doc, anaphor)
    ctx_lo = max(0, lo - cfg.back_context_tokens)
    context_span = (ctx_lo, lo - 1) if lo > ctx_lo else None
    target = _marked_text(
        doc, lo, hi, [((anaphor.start, anaphor.end), ANAPHOR_OPEN, ANAPHOR_CLOSE)]
    )
    return Window(
        context_text=doc.token_text(ctx_lo, lo - 1) if context_span else "",
        target_text=target,
        target_span=(lo, hi),
        context_span=context_span,
    )


def subtype_window_end_to_end(
    doc: Document, anaphor: Mention, antecedent: Mention, cfg: WindowConfig
) -> Window:
    """Anaphor sentence plus back context with both spans marked.

    The back context is extended (with a warning) when the antecedent lies
    beyond the configured window, since both markers must be present.
    """
    _check_pair(anaphor, antecedent)
    lo, hi = _enclosing_sentence_range(doc, anaphor)
    ctx_lo = max(0, lo - cfg.back_context_tokens)
    if antecedent.start < ctx_lo:
        logger.warning(
            "document %s: antecedent at token %d outside %d-token back "
            "context; extending window",
            doc.doc_id,
            antecedent.start,
            cfg.back_context_tokens,
        )
        ctx_lo = antecedent.start
    spans = [((anaphor.start, anaphor.end), ANAPHOR_OPEN, ANAPHOR_CLOSE)]
    ant_span = ((antecedent.start, antecedent.end), ANTECEDENT_MARK, ANTECEDENT_MARK)
    if antecedent.start >= lo:
        target = _marked_text(doc, lo, hi, spans + [ant_span])
        context = doc.token_text(ctx_lo, lo - 1) if lo > ctx_lo else ""
    else:
        target = _marked_text(doc, lo, hi, spans)
        context = _marked_text(doc, ctx_lo, lo - 1, [ant_span]) if lo > ctx_lo else ""
    return Window(
        context_text=context,
        target_text=target,
        target_span=(lo, hi),
        context_span=(ctx_lo, lo - 1) if lo > ctx_lo else None,
    )


def subtype_window_basic(
    doc: Document, anaphor: Mention, antecedent: Mention, cfg: WindowConfig
) -> Window:
    """Individual sentences of antecedent and anaphor with small buffers.

    Excerpts are concatenated antecedent-sentence-first; when both spans
    share one buffered excerpt a single excerpt carries both markers.
    """
    _check_pair(anaphor, antecedent)
    buf = cfg.basic_subtype_buffer_tokens
    ana_lo, ana_hi = _enclosing_sentence_range(doc, anaphor)
    ant_lo, ant_hi = _enclosing_sentence_range(doc, antecedent)
    ana_lo, ana_hi = max(0, ana_lo - buf), min(len(doc.tokens) - 1, ana_hi + buf)
    ant_lo, ant_hi = max(0, ant_lo - buf), min(len(doc.tokens) - 1, ant_hi + buf)
    ana_span = ((anaphor.start, anaphor.end), ANAPHOR_OPEN, ANAPHOR_CLOSE)
    ant_span = ((antecedent.start, antecedent.end), ANTECEDENT_MARK, ANTECEDENT_MARK)
    if ant_hi >= ana_lo - 1:  # overlapping or adjacent excerpts: merge
        lo, hi = min(ant_lo, ana_lo), max(ant_hi, ana_hi)
        text = _marked_text(doc, lo, hi, [ana_span, ant_span])
        return Window(context_text="", target_text=text, target_span=(lo, hi))
    ant_text = _marked_text(doc, ant_lo, ant_hi, [ant_span])
    ana_text = _marked_text(doc, ana_lo, ana_hi, [ana_span])
    return Window(
        context_text="",
        target_text=ant_text + " ... " + ana_text,
        target_span=(ana_lo, ana_hi),
        context_span=(ant_lo, ant_hi),
    )


def _check_pair(anaphor: Mention, antecedent: Mention):
    if antecedent.span == anaphor.span:
        raise MarkerError("antecedent span equals anaphor span")
    if antecedent.start <= anaphor.end and anaphor.start <= antecedent.end:
        raise MarkerError(
            f"antecedent span {antecedent.span} overlaps anaphor span "
            f"{anaphor.span}; cannot mark unambiguously"
        )
    if antecedent.start >= anaphor.start:
        raise MarkerError("antecedent must precede the anaphor")
