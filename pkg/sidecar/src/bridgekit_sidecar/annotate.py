"""Deterministic rule-based annotator and the annotator registry.

The service contract is annotator-agnostic: any callable that maps raw
text to an AnnotationResult can be registered. The built-in ``rule``
annotator is a fully deterministic stand-in for a neural toolkit —
regex tokenization, closed-class/suffix POS tagging, determiner- and
pronoun-triggered mention spans, and head-noun string-match coreference
chains (singletons included). The neural selectors (``gum-style``,
``ontonotes-style``) are declared but report unavailable unless the
corresponding toolkit models are installed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

TOKEN_RE = re.compile(r"[A-Za-z0-9']+|[^\sA-Za-z0-9]")
SENTENCE_FINAL = {".", "!", "?"}

DETERMINERS = {"the", "a", "an", "this", "that", "these", "those"}
PRONOUNS = {
    "i", "you", "he", "she", "it", "we", "they",
    "him", "her", "them", "me", "us",
    "his", "hers", "its", "their", "theirs", "my", "your", "our",
}
PREPOSITIONS = {
    "in", "on", "at", "of", "to", "from", "with", "by", "for",
    "into", "onto", "over", "under", "about", "after", "before",
}
CONJUNCTIONS = {"and", "or", "but", "nor", "so", "yet"}
COPULAS = {"is", "are", "was", "were", "be", "been", "being", "am"}


class ModelUnavailable(Exception):
    """The requested annotation model cannot be loaded in this process."""


@dataclass(frozen=True)
class AnnotatedToken:
    text: str
    sentence_index: int
    pos: str


@dataclass(frozen=True)
class MentionSpan:
    id: str
    start: int  # inclusive token index
    end: int  # inclusive token index
    chain_id: str


@dataclass(frozen=True)
class Dependency:
    head: int  # token index of the head, -1 for the sentence root
    relation: str


@dataclass
class AnnotationResult:
    model: str
    tokens: list[AnnotatedToken] = field(default_factory=list)
    mentions: list[MentionSpan] = field(default_factory=list)
    deps: list[Dependency] = field(default_factory=list)

    def to_response_dict(self) -> dict:
        return {
            "model": self.model,
            "tokens": [
                {"text": t.text, "sentence_index": t.sentence_index}
                for t in self.tokens
            ],
            "pos": [t.pos for t in self.tokens],
            "mentions": [
                {"id": m.id, "start": m.start, "end": m.end, "chain_id": m.chain_id}
                for m in self.mentions
            ],
            "deps": [{"head": d.head, "relation": d.relation} for d in self.deps],
        }

    def to_document_dict(self, doc_id: str) -> dict:
        """Corpus-schema document object (no gold bridging, of course)."""
        return {
            "doc_id": doc_id,
            "tokens": [
                {"text": t.text, "sentence_index": t.sentence_index, "pos": t.pos}
                for t in self.tokens
            ],
            "mentions": [
                {"id": m.id, "start": m.start, "end": m.end, "chain_id": m.chain_id}
                for m in self.mentions
            ],
            "bridging": [],
        }


def _pos_tag(word: str, sentence_position: int) -> str:
    lower = word.lower()
    if not word[0].isalnum() and len(word) == 1:
        return word  # punctuation tags as itself
    if lower in DETERMINERS:
        return "DT"
    if lower in PRONOUNS:
        return "PRP"
    if lower in PREPOSITIONS:
        return "IN"
    if lower in CONJUNCTIONS:
        return "CC"
    if lower in COPULAS:
        return "VBZ"
    if word[0].isdigit():
        return "CD"
    if lower.endswith("ly"):
        return "RB"
    if lower.endswith("ed"):
        return "VBD"
    if lower.endswith("er") and len(lower) > 4:
        return "JJR"
    if word[0].isupper() and sentence_position > 0:
        return "NNP"
    if lower.endswith("s") and len(lower) > 3:
        return "NNS"
    return "NN"


_CONTENT_TAGS = {"NN", "NNS", "NNP", "JJR", "CD"}


def rule_annotate(text: str) -> AnnotationResult:
    result = AnnotationResult(model="rule-0.1")
    sentence = 0
    sentence_position = 0
    for match in TOKEN_RE.finditer(text):
        word = match.group(0)
        result.tokens.append(
            AnnotatedToken(
                text=word,
                sentence_index=sentence,
                pos=_pos_tag(word, sentence_position),
            )
        )
        sentence_position += 1
        if word in SENTENCE_FINAL:
            sentence += 1
            sentence_position = 0

    _attach_mentions(result)
    _attach_deps(result)
    return result


def _attach_mentions(result: AnnotationResult):
    tokens = result.tokens
    spans: list[tuple[int, int]] = []
    i = 0
    while i < len(tokens):
        tag = tokens[i].pos
        if tag == "PRP":
            spans.append((i, i))
            i += 1
            continue
        if tag in ("DT", "NNP"):
            # Extend over content-word tags within the same sentence.
            j = i + 1 if tag == "DT" else i
            end = i if tag == "NNP" else i - 1
            while (
                j < len(tokens)
                and tokens[j].sentence_index == tokens[i].sentence_index
                and tokens[j].pos in _CONTENT_TAGS
            ):
                end = j
                j += 1
            # A determiner needs at least one content token after it; a
            # proper noun is a mention on its own.
            if end >= (i + 1 if tag == "DT" else i):
                spans.append((i, end))
                i = end + 1
                continue
        i += 1

    # Coreference by shared head noun (last token), singletons included.
    chain_of_head: dict[str, str] = {}
    for k, (start, end) in enumerate(spans):
        head = tokens[end].text.lower()
        chain_id = chain_of_head.setdefault(head, f"c{len(chain_of_head)}")
        result.mentions.append(
            MentionSpan(id=f"m{k}", start=start, end=end, chain_id=chain_id)
        )


def _attach_deps(result: AnnotationResult):
    tokens = result.tokens
    # Sentence root: first verb-like token, else first token of the sentence.
    roots: dict[int, int] = {}
    for i, tok in enumerate(tokens):
        s = tok.sentence_index
        if s not in roots:
            roots[s] = i
        elif tok.pos.startswith("VB") and not tokens[roots[s]].pos.startswith("VB"):
            roots[s] = i
    for i, tok in enumerate(tokens):
        root = roots[tok.sentence_index]
        if i == root:
            result.deps.append(Dependency(head=-1, relation="root"))
        elif tok.pos == "DT":
            result.deps.append(Dependency(head=root, relation="det"))
        elif tok.pos == tok.text:
            result.deps.append(Dependency(head=root, relation="punct"))
        else:
            result.deps.append(Dependency(head=root, relation="dep"))


class AnnotatorRegistry:
    """Named annotators with explicit load state.

    ``rule`` is always loadable. The neural selectors are listed so
    clients get a stable 503 ("model not loaded") rather than a 400 when
    the corresponding toolkit is absent from the deployment.
    """

    KNOWN = ("rule", "gum-style", "ontonotes-style")

    def __init__(self):
        self._loaded: dict[str, object] = {}

    def load(self, name: str):
        if name not in self.KNOWN:
            raise KeyError(name)
        if name in self._loaded:
            return self._loaded[name]
        if name == "rule":
            self._loaded[name] = rule_annotate
            return rule_annotate
        raise ModelUnavailable(
            f"annotation model {name!r} requires a neural toolkit that is "
            "not installed in this deployment"
        )

    def get(self, name: str):
        if name not in self.KNOWN:
            raise KeyError(name)
        if name not in self._loaded:
            raise ModelUnavailable(f"annotation model {name!r} is not loaded")
        return self._loaded[name]

    @property
    def loaded_models(self) -> tuple[str, ...]:
        return tuple(sorted(self._loaded))
