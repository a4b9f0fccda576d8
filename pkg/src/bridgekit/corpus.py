"""Canonical in-memory document model and corpus interchange format.

A corpus file is UTF-8, line-delimited JSON: one document object per line
with fields ``doc_id``, ``tokens`` (text, sentence_index, optional pos),
``mentions`` (id, start, end, optional chain_id) and ``bridging``
(anaphor_id, optional antecedent_id, subtypes). See docs/corpus-format.md
for the normative schema.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum

logger = logging.getLogger(__name__)


class CorpusError(Exception):
    """Base class for corpus loading/validation failures."""


class CorpusFormatError(CorpusError):
    """Malformed corpus file; carries the 1-based line number."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class IntegrityError(CorpusError):
    """A mention/chain/bridging reference does not resolve."""


class SubtypeLabel(str, Enum):
    """Closed 11-label bridging subtype schema.

    Serialized spellings match the classification prompt's allowed-label
    list exactly.
    """

    COMPARISON_RELATIVE = "comparison-relative"
    COMPARISON_SENSE = "comparison-sense"
    COMPARISON_TIME = "comparison-time"
    ENTITY_MERONOMY = "entity-meronomy"
    ENTITY_ASSOCIATIVE = "entity-associative"
    ENTITY_PROPERTY = "entity-property"
    ENTITY_RESULTATIVE = "entity-resultative"
    SET_MEMBER = "set-member"
    SET_SUBSET = "set-subset"
    SET_SPAN_INTERVAL = "set-span-interval"
    OTHER = "other"

    def __str__(self):
        return self.value


SUBTYPE_LABELS = [label.value for label in SubtypeLabel]


@dataclass(frozen=True)
class Token:
    index: int
    text: str
    sentence_index: int
    pos: str | None = None


@dataclass(frozen=True)
class Mention:
    id: str
    start: int  # inclusive token index
    end: int  # inclusive token index
    text: str
    chain_id: str | None = None

    @property
    def span(self):
        return (self.start, self.end)

    def __len__(self):
        return self.end - self.start + 1


@dataclass(frozen=True)
class CorefChain:
    chain_id: str
    mention_ids: tuple[str, ...]


@dataclass(frozen=True)
class BridgingInstance:
    anaphor_id: str
    antecedent_id: str | None
    subtypes: frozenset[SubtypeLabel] = frozenset()


class Document:
    """Immutable tokenized document with mentions, chains and gold bridges."""

    def __init__(self, doc_id, tokens, mentions, chains, gold_bridging):
        self.doc_id = doc_id
        self.tokens: tuple[Token, ...] = tuple(tokens)
        self.mentions: tuple[Mention, ...] = tuple(mentions)
        self.chains: tuple[CorefChain, ...] = tuple(chains)
        self.gold_bridging: tuple[BridgingInstance, ...] = tuple(gold_bridging)
        self._mention_by_id = {m.id: m for m in self.mentions}
        self._chain_by_id = {c.chain_id: c for c in self.chains}
        self._sentence_bounds = _sentence_bounds(self.tokens)

    @property
    def n_sentences(self):
        return len(self._sentence_bounds)

    def sentence_span(self, sentence_index):
        """Return (first_token, last_token), inclusive, of a sentence."""
        try:
            return self._sentence_bounds[sentence_index]
        except IndexError:
            raise IndexError(
                f"document {self.doc_id} has no sentence {sentence_index}"
            ) from None

    def mention(self, mention_id) -> Mention:
        try:
            return self._mention_by_id[mention_id]
        except KeyError:
            raise IntegrityError(
                f"unknown mention id {mention_id!r} in document {self.doc_id}"
            ) from None

    def chain(self, chain_id) -> CorefChain:
        try:
            return self._chain_by_id[chain_id]
        except KeyError:
            raise IntegrityError(
                f"unknown chain id {chain_id!r} in document {self.doc_id}"
            ) from None

    def token_text(self, start, end):
        """Single-space join of tokens start..end inclusive, verbatim."""
        return " ".join(t.text for t in self.tokens[start : end + 1])

    def mention_text(self, mention: Mention):
        return self.token_text(mention.start, mention.end)


@dataclass
class Corpus:
    name: str
    documents: list[Document] = field(default_factory=list)
    splits: dict[str, str] = field(default_factory=dict)  # doc_id -> split label
    excluded_gold: int = 0  # gold bridges dropped for non-preceding antecedents

    def document(self, doc_id) -> Document:
        for doc in self.documents:
            if doc.doc_id == doc_id:
                return doc
        raise IntegrityError(f"unknown document id {doc_id!r}")


def _sentence_bounds(tokens):
    bounds = []
    for tok in tokens:
        if tok.sentence_index == len(bounds):
            bounds.append([tok.index, tok.index])
        elif tok.sentence_index == len(bounds) - 1:
            bounds[-1][1] = tok.index
        else:
            raise CorpusFormatError(
                f"sentence_index {tok.sentence_index} at token {tok.index} "
                "is not contiguous"
            )
    return [tuple(b) for b in bounds]


def first_mention_of_chain(doc: Document, mention_id) -> bool:
    """True iff the mention is a singleton or the earliest mention of its chain.

    Singletons (no chain_id) count as first mentions.
    """
    mention = doc.mention(mention_id)
    if mention.chain_id is None:
        return True
    chain = doc.chain(mention.chain_id)
    earliest = min(
        (doc.mention(mid) for mid in chain.mention_ids),
        key=lambda m: (m.start, m.end),
    )
    return earliest.id == mention_id


def document_from_dict(obj, line_number=None) -> tuple[Document, int]:
    """Build and validate a Document; returns (doc, excluded_gold_count)."""
    try:
        doc_id = obj["doc_id"]
        raw_tokens = obj["tokens"]
    except (KeyError, TypeError) as exc:
        raise CorpusFormatError(f"missing required field: {exc}", line_number)

    tokens = []
    for i, t in enumerate(raw_tokens):
        try:
            tokens.append(
                Token(
                    index=i,
                    text=t["text"],
                    sentence_index=t["sentence_index"],
                    pos=t.get("pos"),
                )
            )
        except (KeyError, TypeError) as exc:
            raise CorpusFormatError(
                f"document {doc_id}: bad token {i}: {exc}", line_number
            )

    mentions = []
    seen_ids = set()
    chain_members: dict[str, list[str]] = {}
    for m in obj.get("mentions", []):
        try:
            mid, start, end = m["id"], m["start"], m["end"]
        except (KeyError, TypeError) as exc:
            raise CorpusFormatError(
                f"document {doc_id}: bad mention: {exc}", line_number
            )
        if mid in seen_ids:
            raise IntegrityError(f"document {doc_id}: duplicate mention id {mid!r}")
        seen_ids.add(mid)
        if not (0 <= start <= end < len(tokens)):
            raise CorpusFormatError(
                f"document {doc_id}: mention {mid!r} span [{start}, {end}] "
                f"outside document bounds (0..{len(tokens) - 1})",
                line_number,
            )
        text = " ".join(tok.text for tok in tokens[start : end + 1])
        chain_id = m.get("chain_id")
        mentions.append(Mention(id=mid, start=start, end=end, text=text, chain_id=chain_id))
        if chain_id is not None:
            chain_members.setdefault(chain_id, []).append(mid)

    mention_by_id = {m.id: m for m in mentions}
    chains = []
    for chain_id, mids in chain_members.items():
        mids.sort(key=lambda mid: (mention_by_id[mid].start, mention_by_id[mid].end))
        chains.append(CorefChain(chain_id=chain_id, mention_ids=tuple(mids)))

    gold = []
    excluded = 0
    for b in obj.get("bridging", []):
        anaphor_id = b.get("anaphor_id")
        antecedent_id = b.get("antecedent_id")
        if anaphor_id not in mention_by_id:
            raise IntegrityError(
                f"document {doc_id}: bridging anaphor id {anaphor_id!r} "
                "not in mentions"
            )
        if antecedent_id is not None and antecedent_id not in mention_by_id:
            raise IntegrityError(
                f"document {doc_id}: bridging antecedent id {antecedent_id!r} "
                "not in mentions"
            )
        if antecedent_id == anaphor_id:
            raise IntegrityError(
                f"document {doc_id}: anaphor and antecedent are the same "
                f"mention {anaphor_id!r}"
            )
        subtypes = frozenset(SubtypeLabel(s) for s in b.get("subtypes", []))
        if antecedent_id is not None:
            anaphor = mention_by_id[anaphor_id]
            antecedent = mention_by_id[antecedent_id]
            if antecedent.end >= anaphor.start:
                # Bridging requires a preceding antecedent; overlapping or
                # following gold spans are excluded with a warning.
                logger.warning(
                    "document %s: excluding gold bridge %r -> %r: antecedent "
                    "does not precede anaphor",
                    doc_id,
                    anaphor_id,
                    antecedent_id,
                )
                excluded += 1
                continue
        gold.append(
            BridgingInstance(
                anaphor_id=anaphor_id,
                antecedent_id=antecedent_id,
                subtypes=subtypes,
            )
        )

    return Document(doc_id, tokens, mentions, chains, gold), excluded


def document_to_dict(doc: Document) -> dict:
    """Canonical dict form; inverse of document_from_dict for valid docs."""
    tokens = []
    for t in doc.tokens:
        tok = {"text": t.text, "sentence_index": t.sentence_index}
        if t.pos is not None:
            tok["pos"] = t.pos
        tokens.append(tok)
    mentions = []
    for m in doc.mentions:
        item = {"id": m.id, "start": m.start, "end": m.end}
        if m.chain_id is not None:
            item["chain_id"] = m.chain_id
        mentions.append(item)
    bridging = []
    for b in doc.gold_bridging:
        item = {"anaphor_id": b.anaphor_id, "antecedent_id": b.antecedent_id}
        item["subtypes"] = sorted(s.value for s in b.subtypes)
        bridging.append(item)
    return {
        "doc_id": doc.doc_id,
        "tokens": tokens,
        "mentions": mentions,
        "bridging": bridging,
    }


def load_corpus(path, name=None) -> Corpus:
    """Load and validate a line-delimited corpus file.

    Raises CorpusFormatError (with line number) on malformed lines and
    IntegrityError on dangling references. An empty file yields an empty
    corpus.
    """
    corpus = Corpus(name=name or str(path))
    seen_docs = set()
    with open(path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid JSON: {exc}", line_number)
            doc, excluded = document_from_dict(obj, line_number)
            if doc.doc_id in seen_docs:
                raise IntegrityError(f"duplicate doc_id {doc.doc_id!r}")
            seen_docs.add(doc.doc_id)
            corpus.documents.append(doc)
            corpus.excluded_gold += excluded
            if "split" in obj:
                corpus.splits[doc.doc_id] = obj["split"]
    return corpus


def save_corpus(corpus: Corpus, path):
    """Serialize in canonical form; load(save(x)) round-trips byte-identically."""
    with open(path, "w", encoding="utf-8") as f:
        for doc in corpus.documents:
            obj = document_to_dict(doc)
            if doc.doc_id in corpus.splits:
                obj["split"] = corpus.splits[doc.doc_id]
            f.write(json.dumps(obj, ensure_ascii=False, separators=(",", ":")))
            f.write("\n")


def corpus_stats(corpus: Corpus) -> dict:
    """Token count, bridge instance count, and bridges per 1k tokens."""
    from .numfmt import round1

    n_tokens = sum(len(doc.tokens) for doc in corpus.documents)
    n_instances = sum(len(doc.gold_bridging) for doc in corpus.documents)
    if n_tokens == 0:
        raise CorpusError("cannot compute bridges per 1k tokens: corpus has 0 tokens")
    return {
        "tokens": n_tokens,
        "bridge_instances": n_instances,
        "bridges_per_1k_tokens": round1(1000.0 * n_instances / n_tokens),
    }
