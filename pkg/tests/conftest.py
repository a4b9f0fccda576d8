"""Shared fixtures: a hand-built 3-document corpus and its mock script.

The corpus covers all three candidate-suggestion triggers (comparative
adjective, marker keyword, two-token definite), a coreference-filtered
decoy, a "no antecedent" prediction, unalignable predictions, and both
alignment rules (shortest-containing and longest-contained).
"""

import json
from pathlib import Path

import pytest

from bridgekit.corpus import Corpus, Document, Token, Mention, CorefChain, BridgingInstance, SubtypeLabel, save_corpus

DATA_DIR = Path(__file__).parent / "data"


def _doc(doc_id, sentences, mentions, chains, bridging, pos=None):
    tokens = []
    for s_index, sentence in enumerate(sentences):
        for word in sentence.split(" "):
            tokens.append(
                Token(
                    index=len(tokens),
                    text=word,
                    sentence_index=s_index,
                    pos=(pos or {}).get(len(tokens)),
                )
            )
    mention_objs = []
    for mid, start, end, chain_id in mentions:
        text = " ".join(t.text for t in tokens[start : end + 1])
        mention_objs.append(
            Mention(id=mid, start=start, end=end, text=text, chain_id=chain_id)
        )
    chain_objs = [CorefChain(chain_id=c, mention_ids=tuple(ms)) for c, ms in chains]
    gold = [
        BridgingInstance(
            anaphor_id=a,
            antecedent_id=b,
            subtypes=frozenset(SubtypeLabel(s) for s in subtypes),
        )
        for a, b, subtypes in bridging
    ]
    return Document(doc_id, tokens, mention_objs, chain_objs, gold)


def build_fixture_corpus() -> Corpus:
    doc1 = _doc(
        "fix_house",
        [
            "There is a house .",
            "The door is red .",
            "The house is old .",
            "Suddenly , the weather changed .",
            "The windows were broken .",
            "Visitors admired the grand staircase inside .",
        ],
        [
            ("m1", 2, 3, "c1"),    # a house
            ("m2", 5, 6, None),    # The door
            ("m3", 10, 11, "c1"),  # The house (coref decoy)
            ("m4", 17, 18, None),  # the weather
            ("m5", 21, 22, None),  # The windows
            ("m6", 28, 30, None),  # the grand staircase
        ],
        [("c1", ["m1", "m3"])],
        [
            ("m2", "m1", ["entity-meronomy"]),
            ("m5", "m1", ["entity-meronomy"]),
            ("m6", "m1", ["entity-meronomy"]),
        ],
    )
    doc2 = _doc(
        "fix_dogs",
        [
            "We saw a dog in the park .",
            "It barked loudly .",
            "Later a smaller dog appeared .",
            "The others stayed home .",
            "The puppy was loudest .",
            "A different breed showed up .",
        ],
        [
            ("d1", 2, 3, "cd"),    # a dog
            ("d2", 5, 6, None),    # the park
            ("d3", 8, 8, "cd"),    # It
            ("d4", 13, 15, None),  # a smaller dog
            ("d5", 18, 19, None),  # The others
            ("d6", 23, 24, None),  # The puppy
            ("d7", 28, 30, None),  # A different breed
        ],
        [("cd", ["d1", "d3"])],
        [
            ("d4", "d1", ["comparison-relative"]),
            ("d5", "d4", ["comparison-relative", "comparison-sense"]),
            ("d6", "d5", ["set-member"]),
            ("d7", "d1", ["comparison-relative"]),
        ],
        pos={14: "JJR"},  # "smaller"
    )
    doc3 = _doc(
        "fix_library",
        [
            "The library opened at nine .",
            "The books were dusty .",
            "A clock ticked in the hall .",
            "Students arrived before noon .",
            "Yesterday the shelves were emptied .",
            "The reading room stayed shut .",
        ],
        [
            ("L1", 0, 1, None),    # The library
            ("L2", 6, 7, None),    # The books
            ("L3", 11, 12, None),  # A clock
            ("L4", 15, 16, None),  # the hall
            ("L5", 18, 18, None),  # Students
            ("L6", 21, 21, None),  # noon
            ("L7", 23, 23, None),  # Yesterday
            ("L8", 24, 25, None),  # the shelves
            ("L9", 29, 31, None),  # The reading room
        ],
        [],
        [
            ("L2", "L1", ["entity-associative"]),
            ("L4", "L1", ["entity-meronomy"]),
            ("L8", "L1", ["entity-meronomy"]),
            ("L9", "L1", ["entity-meronomy"]),
        ],
    )
    return Corpus(name="fixture", documents=[doc1, doc2, doc3])


def _recognition_pattern(target):
    return f"Text:\n{target}\nAnswer(s):"


def _resolution_pattern(anaphor_text):
    return (
        "the associative antecedent of the bridging anaphor"
        + " && {{ "
        + anaphor_text
        + " }}"
    )


def _subtype_pattern(anaphor_text):
    return "Classify the subtype(s) && {{ " + anaphor_text + " }}"


def build_mock_script() -> dict:
    """Substring patterns ("&&" joins conjuncts) mapped to responses."""
    script = {}
    # Recognition (per-sentence base queries).
    recognition = {
        # fix_house
        "There is a house . The door is red . The house is old .": '["The door"]',
        "The door is red . The house is old . Suddenly , the weather changed": '["The house"]',
        ", the weather changed . The windows were broken . Visitors admired the grand staircase": '["The windows"]',
        "The windows were broken . Visitors admired the grand staircase inside .": '["staircase"]',
        # fix_dogs
        "a smaller dog appeared . The others stayed home . The puppy was loudest .": '["The others"]',
        "The others stayed home . The puppy was loudest . A different breed showed up": '["The puppy"]',
        # fix_library
        "library opened at nine . The books were dusty . A clock ticked in the": '["The books"]',
        "The books were dusty . A clock ticked in the hall . Students arrived before noon .": 'Sure! ["A clock", "old clock tower"]',
        "ticked in the hall . Students arrived before noon . Yesterday the shelves were emptied": '["Students arrived before noon"]',
        "Students arrived before noon . Yesterday the shelves were emptied . The reading room stayed shut": '["the shelves"]',
    }
    for target, response in recognition.items():
        script[_recognition_pattern(target)] = response
    # Candidate confirmations.
    script['Candidate: "the weather"'] = '["the weather"]'
    script['Candidate: "a smaller dog"'] = '["a smaller dog"]'
    script['Candidate: "A different breed"'] = '["a different breed"]'
    # Resolution.
    for anaphor, answer in {
        "The door": "a house",
        "the weather": "no antecedent",
        "The windows": "a house",
        "the grand staircase": "a house",
        "a smaller dog": "It",
        "The others": "a smaller dog",
        "The puppy": "The others",
        "A different breed": "a dog",
        "The books": "The library",
        "A clock": "The library",
        "Students": "no antecedent",
        "the shelves": "The library",
        "the hall": "The library",
        "The reading room": "no antecedent",
    }.items():
        script[_resolution_pattern(anaphor)] = answer
    # Subtype classification.
    for anaphor, labels in {
        "The door": "entity-meronomy",
        "The windows": "entity-meronomy",
        "the grand staircase": "entity-meronomy",
        "a smaller dog": "comparison-relative",
        "The others": "comparison-relative;comparison-sense",
        "The puppy": "set-member",
        "A different breed": "comparison-relative",
        "The books": "entity-associative",
        "A clock": "other",
        "the shelves": "entity-meronomy",
        "the hall": "entity-meronomy",
        "The reading room": "entity-associative",
    }.items():
        script[_subtype_pattern(anaphor)] = labels
    return script


@pytest.fixture
def fixture_corpus():
    return build_fixture_corpus()


@pytest.fixture
def fixture_corpus_path(tmp_path):
    path = tmp_path / "fixture_corpus.jsonl"
    save_corpus(build_fixture_corpus(), path)
    return path


@pytest.fixture
def mock_script():
    return build_mock_script()


@pytest.fixture
def mock_script_path(tmp_path):
    path = tmp_path / "mock_script.json"
    path.write_text(
        json.dumps({"script": build_mock_script(), "default": "[]"}),
        encoding="utf-8",
    )
    return path
