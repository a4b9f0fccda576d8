"""Deterministic pre/post-processing passes around the LLM queries.

Three passes: aligning predicted surface strings to attested mention
spans, suggesting candidate anaphora for confirmation queries, and
filtering predictions that are subsequent mentions of a coreference chain.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from .corpus import Document, Mention, first_mention_of_chain

logger = logging.getLogger(__name__)

DEFAULT_KEYWORDS = ("another", "others", "different", "following", "yesterday")

DEFINITE_DETERMINERS = frozenset({"the", "this", "that", "these", "those"})

# POS tags marking comparative-degree adjectives (PTB / UPOS-with-feats).
COMPARATIVE_POS_TAGS = frozenset({"JJR", "RBR"})

# Fallback lexicon when no POS annotation is available; "-er" alone
# over-triggers (other, number, ...), so membership is required. Lossy.
COMPARATIVE_LEXICON = frozenset(
    {
        "bigger", "smaller", "larger", "greater", "lesser", "older", "younger",
        "newer", "earlier", "later", "higher", "lower", "longer", "shorter",
        "better", "worse", "fewer", "faster", "slower", "stronger", "weaker",
        "cheaper", "richer", "poorer", "deeper", "wider", "narrower", "closer",
        "further", "farther", "heavier", "lighter", "easier", "harder",
    }
)


@dataclass(frozen=True)
class CandidateKeywordList:
    """Lowercase trigger words for the candidate-suggestion pass."""

    words: tuple[str, ...] = DEFAULT_KEYWORDS

    def __post_init__(self):
        if not self.words:
            raise ValueError("keyword list must be non-empty")
        object.__setattr__(
            self, "words", tuple(w.lower() for w in self.words)
        )

    @classmethod
    def from_file(cls, path):
        """One word per line; blank lines and '#' comments ignored."""
        words = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                words.append(line)
        return cls(words=tuple(words))


def _occurrences(doc: Document, predicted: str, search_region):
    """Token spans in search_region matching the predicted string.

    Matching is case-insensitive exact token-sequence equality after
    whitespace-splitting the predicted string.
    """
    wanted = [w.lower() for w in predicted.split()]
    if not wanted:
        return []
    lo, hi = search_region
    lo, hi = max(0, lo), min(len(doc.tokens) - 1, hi)
    n = len(wanted)
    spans = []
    for start in range(lo, hi - n + 2):
        if all(
            doc.tokens[start + k].text.lower() == wanted[k] for k in range(n)
        ):
            spans.append((start, start + n - 1))
    return spans


def _contains(outer, inner):
    return outer[0] <= inner[0] and inner[1] <= outer[1]


def align_to_mention(
    doc: Document,
    predicted: str,
    search_region: tuple[int, int],
    mentions,
    reference: int | None = None,
) -> Mention | None:
    """Snap a predicted surface string onto an attested mention span.

    Preference order: the shortest mention containing an occurrence of the
    predicted string, then the longest mention contained within an
    occurrence, else None (rejected). Ties resolve by proximity to the
    ``reference`` token index, then earliest document position.
    """
    spans = _occurrences(doc, predicted, search_region)
    if not spans:
        return None

    def sort_key(mention):
        proximity = (
            abs(mention.start - reference) if reference is not None else 0
        )
        return (proximity, mention.start, mention.end)

    containing = [
        m for m in mentions if any(_contains(m.span, occ) for occ in spans)
    ]
    if containing:
        shortest = min(len(m) for m in containing)
        tied = [m for m in containing if len(m) == shortest]
        return min(tied, key=sort_key)

    contained = [
        m for m in mentions if any(_contains(occ, m.span) for occ in spans)
    ]
    if contained:
        longest = max(len(m) for m in contained)
        tied = [m for m in contained if len(m) == longest]
        return min(tied, key=sort_key)

    return None


def _has_pos(doc: Document) -> bool:
    return any(t.pos is not None for t in doc.tokens)


def _is_comparative(doc: Document, mention: Mention, use_pos: bool) -> bool:
    for tok in doc.tokens[mention.start : mention.end + 1]:
        if use_pos:
            if tok.pos in COMPARATIVE_POS_TAGS:
                return True
        elif tok.text.lower() in COMPARATIVE_LEXICON:
            return True
    return False


def suggest_candidates(
    doc: Document,
    sentence_index: int,
    mentions,
    keywords: CandidateKeywordList = CandidateKeywordList(),
) -> list[Mention]:
    """Mentions of a sentence flagged as likely bridging anaphora.

    Triggers: a comparative adjective inside the mention, a relative or
    temporal marker keyword, or a two-token mention headed by a definite
    determiner. Returns matches in document order, deduplicated.
    """
    s_lo, s_hi = doc.sentence_span(sentence_index)
    use_pos = _has_pos(doc)
    if not use_pos:
        logger.debug(
            "document %s has no POS annotation; comparative trigger degrades "
            "to the lexicon heuristic",
            doc.doc_id,
        )
    keyword_set = set(keywords.words)
    out = []
    seen = set()
    for mention in sorted(mentions, key=lambda m: (m.start, m.end)):
        if mention.start < s_lo or mention.end > s_hi:
            continue
        if mention.span in seen:
            continue
        words = [t.text.lower() for t in doc.tokens[mention.start : mention.end + 1]]
        triggered = (
            _is_comparative(doc, mention, use_pos)
            or any(w in keyword_set for w in words)
            or (len(words) == 2 and words[0] in DEFINITE_DETERMINERS)
        )
        if triggered:
            seen.add(mention.span)
            out.append(mention)
    return out


def filter_coref(predictions, doc: Document):
    """Split predictions into (kept, removed) by chain-first-mention status.

    A prediction survives iff it is a singleton or the earliest mention of
    its coreference chain; order is preserved.
    """
    kept, removed = [], []
    for mention in predictions:
        if mention.chain_id is None or first_mention_of_chain(doc, mention.id):
            kept.append(mention)
        else:
            removed.append(mention)
    return kept, removed
